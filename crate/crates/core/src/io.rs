//! File formats: pose and trajectory CSV logs, plan and report JSON, and
//! the per-set summary table.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so every
//! writer here is exactly inverted by its parser.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{FrameId, RigidTransform, Rotation3, Vec3};
use crate::handeye::{HandEyeDataset, HandEyeSample, HandEyeSolution};
use crate::metrics::{AnalysisConfig, MetricsReport, PlannedCut, TrajectoryRecording, TrajectorySample};
use crate::planner::PassPolicy;
use crate::pointcal::{PivotDataset, TipCalDataset, TipCalSample};

pub const POSE_LOG_HEADER: [&str; 10] = ["timestamp", "source", "target", "qw", "qx", "qy", "qz", "tx", "ty", "tz"];
pub const TRAJECTORY_LOG_HEADER: [&str; 5] = ["timestamp", "x", "y", "z", "active"];

/// Accepted quaternion norm band; inside it the quaternion is renormalised.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-3;

/// One pose measurement: the pose of `target` expressed in `source`, i.e.
/// the transform taking `target` coordinates to `source` coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoseLogRow {
    pub timestamp: f64,
    pub source: FrameId,
    pub target: FrameId,
    /// Unit quaternion `[w, x, y, z]`.
    pub quaternion: [f64; 4],
    pub translation: Vec3,
}

impl PoseLogRow {
    pub fn new(timestamp: f64, source: FrameId, target: FrameId, pose: &RigidTransform) -> Self {
        PoseLogRow { timestamp, source, target, quaternion: pose.rotation.to_quaternion(), translation: pose.translation }
    }

    pub fn pose(&self) -> RigidTransform {
        let [w, x, y, z] = self.quaternion;
        RigidTransform::new(Rotation3::from_quaternion(w, x, y, z), self.translation)
    }
}

/// Rejects quaternions outside the tolerance band and rescales the rest.
/// Already-unit quaternions (to a few ulps) are returned untouched.
pub fn normalize_quaternion(q: [f64; 4]) -> std::result::Result<[f64; 4], String> {
    let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > QUATERNION_NORM_TOLERANCE {
        return Err(format!("quaternion norm {norm} outside [0.999, 1.001]"));
    }
    if (norm - 1.0).abs() <= 4.0 * f64::EPSILON {
        Ok(q)
    } else {
        Ok(q.map(|c| c / norm))
    }
}

fn csv_reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(bytes)
}

/// Physical line numbers from byte offsets. The csv reader's own count
/// skips blank lines.
struct LineCounter<'a> {
    bytes: &'a [u8],
    offset: usize,
    line: u64,
}

impl<'a> LineCounter<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        LineCounter { bytes, offset: 0, line: 1 }
    }

    /// Line of the first content at or after `byte`; record offsets point
    /// at the blank lines that precede a record.
    fn at(&mut self, byte: u64) -> u64 {
        let mut byte = (byte as usize).min(self.bytes.len());
        while byte < self.bytes.len() && matches!(self.bytes[byte], b'\n' | b'\r') {
            byte += 1;
        }
        if byte < self.offset {
            self.offset = 0;
            self.line = 1;
        }
        self.line += self.bytes[self.offset..byte].iter().filter(|&&b| b == b'\n').count() as u64;
        self.offset = byte;
        self.line
    }

    fn of(&mut self, record: &csv::ByteRecord) -> u64 {
        record.position().map_or(self.line, |p| self.at(p.byte()))
    }

    fn error(&mut self, e: csv::Error) -> Error {
        let line = e.position().map_or(self.line, |p| self.at(p.byte()));
        Error::Parse { line, reason: e.to_string() }
    }
}

fn check_header(reader: &mut csv::Reader<&[u8]>, lines: &mut LineCounter, expected: &[&str]) -> Result<bool> {
    let mut record = csv::ByteRecord::new();
    if !reader.read_byte_record(&mut record).map_err(|e| lines.error(e))? {
        return Ok(false);
    }
    let line = lines.of(&record);
    if record.len() != expected.len() || record.iter().zip(expected).any(|(got, want)| got != want.as_bytes()) {
        return Err(Error::Parse { line, reason: format!("expected header `{}`", expected.join(",")) });
    }
    Ok(true)
}

fn field_str<'a>(record: &'a csv::ByteRecord, i: usize, line: u64, name: &str) -> Result<&'a str> {
    std::str::from_utf8(&record[i]).map_err(|_| Error::Parse { line, reason: format!("{name}: not valid UTF-8") })
}

fn field_f64(record: &csv::ByteRecord, i: usize, line: u64, name: &str) -> Result<f64> {
    let s = field_str(record, i, line, name)?;
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(_) => Err(Error::Parse { line, reason: format!("{name}: non-finite value `{s}`") }),
        Err(_) => Err(Error::Parse { line, reason: format!("{name}: `{s}` is not a number") }),
    }
}

fn check_width(record: &csv::ByteRecord, want: usize, line: u64) -> Result<()> {
    if record.len() != want {
        return Err(Error::Parse { line, reason: format!("expected {want} fields, found {}", record.len()) });
    }
    Ok(())
}

/// Parses a pose log. A header-only (or empty) file yields no rows.
pub fn parse_pose_log(bytes: &[u8]) -> Result<Vec<PoseLogRow>> {
    let mut reader = csv_reader(bytes);
    let mut lines = LineCounter::new(bytes);
    if !check_header(&mut reader, &mut lines, &POSE_LOG_HEADER)? {
        return Ok(Vec::new());
    }
    let mut rows = Vec::new();
    let mut record = csv::ByteRecord::new();
    while reader.read_byte_record(&mut record).map_err(|e| lines.error(e))? {
        let line = lines.of(&record);
        check_width(&record, POSE_LOG_HEADER.len(), line)?;
        let frame = |i: usize| -> Result<FrameId> {
            let label = field_str(&record, i, line, POSE_LOG_HEADER[i])?;
            label.parse().map_err(|_| Error::Frame { line, label: label.to_string() })
        };
        let timestamp = field_f64(&record, 0, line, "timestamp")?;
        let source = frame(1)?;
        let target = frame(2)?;
        let mut v = [0.0; 7];
        for (k, slot) in v.iter_mut().enumerate() {
            *slot = field_f64(&record, 3 + k, line, POSE_LOG_HEADER[3 + k])?;
        }
        let quaternion = normalize_quaternion([v[0], v[1], v[2], v[3]]).map_err(|reason| Error::Parse { line, reason })?;
        rows.push(PoseLogRow { timestamp, source, target, quaternion, translation: Vec3::new(v[4], v[5], v[6]) });
    }
    Ok(rows)
}

pub fn write_pose_log(rows: &[PoseLogRow]) -> String {
    let mut out = POSE_LOG_HEADER.join(",");
    out.push('\n');
    for r in rows {
        let [w, x, y, z] = r.quaternion;
        let t = r.translation;
        let _ = writeln!(out, "{},{},{},{w},{x},{y},{z},{},{},{}", r.timestamp, r.source, r.target, t.x, t.y, t.z);
    }
    out
}

/// Parses a trajectory log into a validated recording.
pub fn parse_trajectory_log(bytes: &[u8]) -> Result<TrajectoryRecording> {
    let mut reader = csv_reader(bytes);
    let mut lines = LineCounter::new(bytes);
    if !check_header(&mut reader, &mut lines, &TRAJECTORY_LOG_HEADER)? {
        return Err(Error::Parse { line: 1, reason: "missing header".into() });
    }
    let mut samples: Vec<TrajectorySample> = Vec::with_capacity(bytes.len() / 40);
    let mut record = csv::ByteRecord::new();
    while reader.read_byte_record(&mut record).map_err(|e| lines.error(e))? {
        let line = lines.of(&record);
        check_width(&record, TRAJECTORY_LOG_HEADER.len(), line)?;
        let timestamp = field_f64(&record, 0, line, "timestamp")?;
        let point = Vec3::new(
            field_f64(&record, 1, line, "x")?,
            field_f64(&record, 2, line, "y")?,
            field_f64(&record, 3, line, "z")?,
        );
        let tool_active = match &record[4] {
            b"1" => true,
            b"0" => false,
            other => {
                return Err(Error::Parse {
                    line,
                    reason: format!("active: expected 0 or 1, found `{}`", String::from_utf8_lossy(other)),
                })
            }
        };
        if let Some(prev) = samples.last() {
            if timestamp <= prev.timestamp {
                return Err(Error::NonMonotoneTime { line, timestamp });
            }
        }
        samples.push(TrajectorySample { timestamp, point, tool_active });
    }
    TrajectoryRecording::new(samples)
}

pub fn write_trajectory_log(rec: &TrajectoryRecording) -> String {
    let mut out = String::with_capacity(rec.len() * 48 + 32);
    out.push_str(&TRAJECTORY_LOG_HEADER.join(","));
    out.push('\n');
    for s in rec.samples() {
        let p = s.point;
        let _ = writeln!(out, "{},{},{},{},{}", s.timestamp, p.x, p.y, p.z, u8::from(s.tool_active));
    }
    out
}

/// Rows whose frames are `(source, target)`, or the reverse (inverted).
fn stream(rows: &[PoseLogRow], source: FrameId, target: FrameId) -> Vec<(f64, RigidTransform)> {
    rows.iter()
        .filter_map(|r| {
            if r.source == source && r.target == target {
                Some((r.timestamp, r.pose()))
            } else if r.source == target && r.target == source {
                Some((r.timestamp, r.pose().inverse()))
            } else {
                None
            }
        })
        .collect()
}

/// Pairs two pose streams on identical timestamps, in the order of the first.
fn pair_streams(
    rows: &[PoseLogRow],
    first: (FrameId, FrameId),
    second: (FrameId, FrameId),
) -> Result<Vec<(RigidTransform, RigidTransform)>> {
    let a = stream(rows, first.0, first.1);
    let b = stream(rows, second.0, second.1);
    let mut by_time: HashMap<u64, RigidTransform> = HashMap::with_capacity(b.len());
    for (t, pose) in &b {
        if by_time.insert(t.to_bits(), *pose).is_some() {
            return Err(Error::InvalidInput(format!("duplicate {}->{} pose at t={t}", second.0, second.1)));
        }
    }
    let mut pairs = Vec::with_capacity(a.len());
    for (t, pose) in a {
        let other = by_time
            .remove(&t.to_bits())
            .ok_or_else(|| Error::InvalidInput(format!("no {}->{} pose at t={t}", second.0, second.1)))?;
        pairs.push((pose, other));
    }
    if let Some(t) = b.iter().map(|(t, _)| *t).find(|t| by_time.contains_key(&t.to_bits())) {
        return Err(Error::InvalidInput(format!("no {}->{} pose at t={t}", first.0, first.1)));
    }
    Ok(pairs)
}

/// Robot flange rows (`S`,`EE`) paired with tool rows (`OT`,`Tool`).
pub fn handeye_dataset_from_log(rows: &[PoseLogRow]) -> Result<HandEyeDataset> {
    let pairs = pair_streams(rows, (FrameId::S, FrameId::EE), (FrameId::OT, FrameId::Tool))?;
    Ok(HandEyeDataset::new(
        pairs.into_iter().map(|(base_from_ee, tracker_from_tool)| HandEyeSample { base_from_ee, tracker_from_tool }).collect(),
    ))
}

pub fn handeye_log(d: &HandEyeDataset) -> Vec<PoseLogRow> {
    d.samples
        .iter()
        .enumerate()
        .flat_map(|(i, s)| {
            let t = i as f64;
            [
                PoseLogRow::new(t, FrameId::S, FrameId::EE, &s.base_from_ee),
                PoseLogRow::new(t, FrameId::OT, FrameId::Tool, &s.tracker_from_tool),
            ]
        })
        .collect()
}

/// Tool rows (`OT`,`Tool`) only.
pub fn pivot_dataset_from_log(rows: &[PoseLogRow]) -> PivotDataset {
    PivotDataset { poses: stream(rows, FrameId::OT, FrameId::Tool).into_iter().map(|(_, p)| p).collect() }
}

pub fn pivot_log(d: &PivotDataset) -> Vec<PoseLogRow> {
    d.poses.iter().enumerate().map(|(i, p)| PoseLogRow::new(i as f64, FrameId::OT, FrameId::Tool, p)).collect()
}

/// Robot flange rows paired with digitizer rows (`OT`,`Digitizer`).
pub fn tipcal_dataset_from_log(rows: &[PoseLogRow], hand_eye: HandEyeSolution) -> Result<TipCalDataset> {
    let pairs = pair_streams(rows, (FrameId::S, FrameId::EE), (FrameId::OT, FrameId::Digitizer))?;
    Ok(TipCalDataset {
        samples: pairs
            .into_iter()
            .map(|(base_from_ee, tracker_from_digitizer)| TipCalSample { base_from_ee, tracker_from_digitizer })
            .collect(),
        hand_eye,
    })
}

pub fn tipcal_log(d: &TipCalDataset) -> Vec<PoseLogRow> {
    d.samples
        .iter()
        .enumerate()
        .flat_map(|(i, s)| {
            let t = i as f64;
            [
                PoseLogRow::new(t, FrameId::S, FrameId::EE, &s.base_from_ee),
                PoseLogRow::new(t, FrameId::OT, FrameId::Digitizer, &s.tracker_from_digitizer),
            ]
        })
        .collect()
}

/// Planned cut, pass policy and analysis settings as one document.
#[derive(Clone, Debug, PartialEq)]
pub struct PlanFile {
    pub plan: PlannedCut,
    pub policy: PassPolicy,
    pub analysis: AnalysisConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlanDoc {
    entry_point: [f64; 3],
    direction: [f64; 3],
    depth_axis: [f64; 3],
    length_mm: f64,
    target_depth_mm: f64,
    cutting_speed_mm_s: f64,
    #[serde(default)]
    pass_policy: PolicyDoc,
    #[serde(default)]
    analysis: AnalysisConfig,
}

#[derive(Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    depth_increment_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    insertion_speed_mm_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    retraction_speed_mm_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cutting_speed_mm_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clearance_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bidirectional: Option<bool>,
}

impl PlanFile {
    /// Plan with a single-pass policy and default analysis settings.
    pub fn new(plan: PlannedCut) -> Self {
        PlanFile { policy: PassPolicy::single_pass(&plan), plan, analysis: AnalysisConfig::default() }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PlanDoc = serde_json::from_str(text)?;
        let v = |a: [f64; 3]| Vec3::new(a[0], a[1], a[2]);
        let plan = PlannedCut::new(
            v(doc.entry_point),
            v(doc.direction),
            v(doc.depth_axis),
            doc.length_mm,
            doc.target_depth_mm,
            doc.cutting_speed_mm_s,
        )?;
        let d = PassPolicy::single_pass(&plan);
        let p = doc.pass_policy;
        let policy = PassPolicy {
            depth_increment: p.depth_increment_mm.unwrap_or(d.depth_increment),
            insertion_speed: p.insertion_speed_mm_s.unwrap_or(d.insertion_speed),
            retraction_speed: p.retraction_speed_mm_s.unwrap_or(d.retraction_speed),
            cutting_speed: p.cutting_speed_mm_s.unwrap_or(d.cutting_speed),
            clearance: p.clearance_mm.unwrap_or(d.clearance),
            bidirectional: p.bidirectional.unwrap_or(d.bidirectional),
        };
        policy.validate(&plan)?;
        doc.analysis.validate()?;
        Ok(PlanFile { plan, policy, analysis: doc.analysis })
    }

    pub fn to_json(&self) -> String {
        let a = |v: Vec3| [v.x, v.y, v.z];
        let doc = PlanDoc {
            entry_point: a(self.plan.entry_point),
            direction: a(self.plan.direction),
            depth_axis: a(self.plan.depth_axis),
            length_mm: self.plan.length,
            target_depth_mm: self.plan.target_depth,
            cutting_speed_mm_s: self.plan.cutting_speed,
            pass_policy: PolicyDoc {
                depth_increment_mm: Some(self.policy.depth_increment),
                insertion_speed_mm_s: Some(self.policy.insertion_speed),
                retraction_speed_mm_s: Some(self.policy.retraction_speed),
                cutting_speed_mm_s: Some(self.policy.cutting_speed),
                clearance_mm: Some(self.policy.clearance),
                bidirectional: Some(self.policy.bidirectional),
            },
            analysis: self.analysis,
        };
        serde_json::to_string_pretty(&doc).expect("plan document serialises")
    }
}

/// Accepts either one report object or an array of them.
pub fn parse_reports_json(text: &str) -> Result<Vec<MetricsReport>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        Many(Vec<MetricsReport>),
        One(Box<MetricsReport>),
    }
    match serde_json::from_str::<OneOrMany>(text) {
        Ok(OneOrMany::Many(v)) => Ok(v),
        Ok(OneOrMany::One(r)) => Ok(vec![*r]),
        // Re-parse as an array for a precise message.
        Err(_) => serde_json::from_str::<Vec<MetricsReport>>(text)
            .or_else(|_| serde_json::from_str::<MetricsReport>(text).map(|r| vec![r]))
            .map_err(Error::from),
    }
}

pub fn write_reports_json(reports: &[MetricsReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialise")
}

/// Mean and sample standard deviation (n − 1; zero for a single value).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    /// Welford's running update.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Stat {
        let (mut n, mut mean, mut m2) = (0usize, 0.0, 0.0);
        for x in values {
            n += 1;
            let delta = x - mean;
            mean += delta / n as f64;
            m2 += delta * (x - mean);
        }
        let std = if n > 1 { (m2 / (n - 1) as f64).sqrt() } else { 0.0 };
        Stat { mean, std }
    }
}

/// One row of the summary table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSummary {
    pub set: String,
    pub trials: usize,
    pub target_depth: Stat,
    pub cutting_speed: Stat,
    pub rmse: Stat,
    pub length: Stat,
    pub procedure_time: Stat,
    pub depth: Stat,
}

/// Groups reports by set (`M1`, `R4`, ...) in order of first appearance.
pub fn summarize(reports: &[MetricsReport]) -> Result<Vec<SetSummary>> {
    if reports.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut order: Vec<String> = Vec::new();
    let mut groups: HashMap<String, Vec<&MetricsReport>> = HashMap::new();
    for r in reports {
        let key = r.label.set_key();
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(r);
    }
    Ok(order
        .into_iter()
        .map(|set| {
            let g = &groups[&set];
            let stat = |f: fn(&MetricsReport) -> f64| Stat::of(g.iter().map(|r| f(r)));
            SetSummary {
                trials: g.len(),
                target_depth: stat(|r| r.target_depth),
                cutting_speed: stat(|r| r.reported_speed()),
                rmse: stat(|r| r.rmse),
                length: stat(|r| r.executed_length),
                procedure_time: stat(|r| r.procedure_time),
                depth: stat(|r| r.mean_depth),
                set,
            }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Text,
    Csv,
    Json,
}

impl std::str::FromStr for TableFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "text" => Ok(TableFormat::Text),
            "csv" => Ok(TableFormat::Csv),
            "json" => Ok(TableFormat::Json),
            _ => Err(format!("unknown format `{s}` (expected text, csv or json)")),
        }
    }
}

pub const TABLE_COLUMNS: [&str; 6] = ["Target Depth", "Cutting Speed", "RMSE", "Length", "Procedure Time", "Depth"];

const CSV_HEADER: &str = "set,trials,target_depth_mean,target_depth_std,cutting_speed_mean,cutting_speed_std,\
rmse_mean,rmse_std,length_mean,length_std,procedure_time_mean,procedure_time_std,depth_mean,depth_std";

fn stats(s: &SetSummary) -> [Stat; 6] {
    [s.target_depth, s.cutting_speed, s.rmse, s.length, s.procedure_time, s.depth]
}

pub fn emit_report_table(reports: &[MetricsReport], format: TableFormat) -> Result<String> {
    let rows = summarize(reports)?;
    Ok(match format {
        TableFormat::Json => serde_json::to_string_pretty(&rows).expect("summary serialises") + "\n",
        TableFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for r in &rows {
                let _ = write!(out, "{},{}", r.set, r.trials);
                for s in stats(r) {
                    let _ = write!(out, ",{},{}", s.mean, s.std);
                }
                out.push('\n');
            }
            out
        }
        TableFormat::Text => {
            let cells: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut row = vec![r.set.clone(), r.trials.to_string()];
                    row.extend(stats(r).iter().map(|s| format!("{:.2} ± {:.2}", s.mean, s.std)));
                    row
                })
                .collect();
            let mut header = vec!["Set".to_string(), "N".to_string()];
            header.extend(TABLE_COLUMNS.iter().map(|c| c.to_string()));
            let widths: Vec<usize> = (0..header.len())
                .map(|i| cells.iter().map(|r| r[i].chars().count()).chain([header[i].len()]).max().unwrap_or(0))
                .collect();
            let mut out = String::new();
            for row in std::iter::once(&header).chain(&cells) {
                let line: Vec<String> = row.iter().zip(&widths).map(|(c, w)| format!("{c:>w$}")).collect();
                out.push_str(line.join("  ").trim_end());
                out.push('\n');
            }
            out
        }
    })
}

pub fn parse_summary_json(text: &str) -> Result<Vec<SetSummary>> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse_summary_csv(text: &str) -> Result<Vec<SetSummary>> {
    let bytes = text.as_bytes();
    let mut reader = csv_reader(bytes);
    let mut lines = LineCounter::new(bytes);
    let header: Vec<&str> = CSV_HEADER.split(',').collect();
    if !check_header(&mut reader, &mut lines, &header)? {
        return Err(Error::Parse { line: 1, reason: "missing header".into() });
    }
    let mut out = Vec::new();
    let mut record = csv::ByteRecord::new();
    while reader.read_byte_record(&mut record).map_err(|e| lines.error(e))? {
        let line = lines.of(&record);
        check_width(&record, header.len(), line)?;
        let set = field_str(&record, 0, line, "set")?.to_string();
        let trials = field_str(&record, 1, line, "trials")?
            .parse()
            .map_err(|_| Error::Parse { line, reason: "trials: not a count".into() })?;
        let mut s = [Stat { mean: 0.0, std: 0.0 }; 6];
        for (k, slot) in s.iter_mut().enumerate() {
            slot.mean = field_f64(&record, 2 + 2 * k, line, header[2 + 2 * k])?;
            slot.std = field_f64(&record, 3 + 2 * k, line, header[3 + 2 * k])?;
        }
        out.push(SetSummary {
            set,
            trials,
            target_depth: s[0],
            cutting_speed: s[1],
            rmse: s[2],
            length: s[3],
            procedure_time: s[4],
            depth: s[5],
        });
    }
    Ok(out)
}
