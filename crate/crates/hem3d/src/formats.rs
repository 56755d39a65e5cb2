//! On-disk formats: design, technology, profile and archive JSON, the
//! JSON-lines run log, and the route / metrics / execution-time CSV files.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use anyhow::{anyhow, bail, ensure, Context, Result};
use hem3d_core::arch::{Design, GridSpec, Slot, TechKind, Technology, TileKind};
use hem3d_core::objectives::ObjectiveVector;
use hem3d_core::optimizer::IterationRecord;
use hem3d_core::pareto::ArchiveEntry;
use hem3d_core::routing::RoutingTable;
use hem3d_core::selector::Measurement;
use hem3d_core::traffic::{PowerProfile, TrafficProfile};
use serde::{Deserialize, Serialize};

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

// ---------------------------------------------------------------- design

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDoc {
    pub tiers: usize,
    pub rows: usize,
    pub cols: usize,
    pub tier_pitch_mm: f64,
    pub cell_pitch_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TileDoc {
    pub id: usize,
    pub kind: String,
    pub tier: usize,
    pub row: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignDoc {
    pub grid: GridDoc,
    pub tiles: Vec<TileDoc>,
    pub links: Vec<[usize; 2]>,
}

impl DesignDoc {
    /// Canonical form: tiles by id, links as sorted `[low, high]` pairs.
    pub fn from_design(d: &Design) -> Self {
        let g = d.grid();
        DesignDoc {
            grid: GridDoc {
                tiers: g.tiers,
                rows: g.rows,
                cols: g.cols,
                tier_pitch_mm: g.tier_pitch,
                cell_pitch_mm: g.cell_pitch,
            },
            tiles: (0..d.tile_count())
                .map(|id| {
                    let s = d.slot_of(id);
                    TileDoc { id, kind: d.kind(id).as_str().to_string(), tier: s.tier, row: s.row, col: s.col }
                })
                .collect(),
            links: d.links().iter().map(|&(a, b)| [a, b]).collect(),
        }
    }

    /// Rebuilds the design; shape errors are reported, semantic checks are
    /// left to [`Design::validate`].
    pub fn to_design(&self) -> Result<Design> {
        let g = &self.grid;
        let grid = GridSpec::new(g.tiers, g.rows, g.cols, g.tier_pitch_mm, g.cell_pitch_mm)?;
        let n = grid.slot_count();
        ensure!(self.tiles.len() == n, "design lists {} tiles for {} slots", self.tiles.len(), n);
        let mut kinds = vec![None; n];
        let mut placement = vec![usize::MAX; n];
        for t in &self.tiles {
            ensure!(t.id < n, "tile id {} out of range", t.id);
            ensure!(kinds[t.id].is_none(), "tile id {} listed twice", t.id);
            kinds[t.id] = Some(t.kind.parse::<TileKind>()?);
            let slot = grid
                .slot_index(Slot::new(t.tier, t.row, t.col))
                .ok_or_else(|| anyhow!("tile {} sits outside the grid", t.id))?;
            ensure!(placement[slot] == usize::MAX, "two tiles share slot ({}, {}, {})", t.tier, t.row, t.col);
            placement[slot] = t.id;
        }
        let kinds = kinds.into_iter().map(|k| k.expect("every id seen once")).collect();
        let links = self.links.iter().map(|&[a, b]| (a, b)).collect();
        Ok(Design::from_parts(grid, placement, kinds, links)?)
    }
}

pub fn design_to_json(d: &Design) -> Result<String> {
    to_json(&DesignDoc::from_design(d))
}

pub fn design_from_json(text: &str) -> Result<Design> {
    let doc: DesignDoc = serde_json::from_str(text).context("malformed design JSON")?;
    doc.to_design()
}

// ------------------------------------------------------------ technology

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TechnologyDoc {
    pub kind: String,
    pub r_tier: Vec<f64>,
    pub r_base: f64,
    pub lateral_factor: f64,
    pub link_delay_per_mm: f64,
    pub router_stages: u32,
    pub cpu_freq_ghz: f64,
    pub gpu_freq_ghz: f64,
    pub llc_latency_scale: f64,
    pub power_scale: f64,
    pub tile_footprint_scale: f64,
}

impl TechnologyDoc {
    pub fn from_technology(t: &Technology) -> Self {
        TechnologyDoc {
            kind: t.kind.as_str().to_string(),
            r_tier: t.r_tier.clone(),
            r_base: t.r_base,
            lateral_factor: t.lateral_factor,
            link_delay_per_mm: t.link_delay_per_mm,
            router_stages: t.router_stages,
            cpu_freq_ghz: t.cpu_freq_ghz,
            gpu_freq_ghz: t.gpu_freq_ghz,
            llc_latency_scale: t.llc_latency_scale,
            power_scale: t.power_scale,
            tile_footprint_scale: t.tile_footprint_scale,
        }
    }

    pub fn to_technology(&self) -> Result<Technology> {
        let tech = Technology {
            kind: self.kind.parse::<TechKind>()?,
            r_tier: self.r_tier.clone(),
            r_base: self.r_base,
            lateral_factor: self.lateral_factor,
            link_delay_per_mm: self.link_delay_per_mm,
            router_stages: self.router_stages,
            cpu_freq_ghz: self.cpu_freq_ghz,
            gpu_freq_ghz: self.gpu_freq_ghz,
            llc_latency_scale: self.llc_latency_scale,
            power_scale: self.power_scale,
            tile_footprint_scale: self.tile_footprint_scale,
        };
        tech.validate()?;
        Ok(tech)
    }
}

pub fn technology_from_json(text: &str) -> Result<Technology> {
    let doc: TechnologyDoc = serde_json::from_str(text).context("malformed technology JSON")?;
    doc.to_technology()
}

// --------------------------------------------------------------- profile

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficWindowDoc {
    pub window: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerWindowDoc {
    pub window: usize,
    pub watts: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileDoc {
    pub windows: usize,
    pub traffic: Vec<TrafficWindowDoc>,
    pub power: Vec<PowerWindowDoc>,
}

/// Orders window sections by index, requiring `0..windows` exactly once.
fn by_window<'a, T>(windows: usize, items: &'a [T], index: impl Fn(&T) -> usize, what: &str) -> Result<Vec<&'a T>> {
    ensure!(items.len() == windows, "{what} section has {} windows, header says {windows}", items.len());
    let mut slots: Vec<Option<&T>> = vec![None; windows];
    for item in items {
        let w = index(item);
        ensure!(w < windows, "{what} window {w} out of range 0..{windows}");
        ensure!(slots[w].is_none(), "{what} window {w} appears twice");
        slots[w] = Some(item);
    }
    Ok(slots.into_iter().map(|s| s.expect("all windows present")).collect())
}

impl ProfileDoc {
    pub fn from_profiles(traffic: &TrafficProfile, power: &PowerProfile) -> Self {
        ProfileDoc {
            windows: traffic.window_count(),
            traffic: (0..traffic.window_count())
                .map(|w| TrafficWindowDoc {
                    window: w,
                    entries: traffic.flows(w).iter().map(|f| (f.src, f.dst, f.rate)).collect(),
                })
                .collect(),
            power: (0..power.window_count())
                .map(|w| PowerWindowDoc { window: w, watts: power.window(w).to_vec() })
                .collect(),
        }
    }

    pub fn to_profiles(&self) -> Result<(TrafficProfile, PowerProfile)> {
        ensure!(self.windows > 0, "profile has no windows");
        let traffic = by_window(self.windows, &self.traffic, |t| t.window, "traffic")?;
        let power = by_window(self.windows, &self.power, |p| p.window, "power")?;
        let tiles = power[0].watts.len();
        let traffic = TrafficProfile::new(tiles, traffic.iter().map(|t| t.entries.clone()).collect())?;
        let power = PowerProfile::new(tiles, power.iter().map(|p| p.watts.clone()).collect())?;
        Ok((traffic, power))
    }
}

pub fn profile_to_json(traffic: &TrafficProfile, power: &PowerProfile) -> Result<String> {
    to_json(&ProfileDoc::from_profiles(traffic, power))
}

pub fn profile_from_json(text: &str) -> Result<(TrafficProfile, PowerProfile)> {
    let doc: ProfileDoc = serde_json::from_str(text).context("malformed profile JSON")?;
    doc.to_profiles()
}

// --------------------------------------------------------------- archive

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchiveEntryDoc {
    pub design_id: usize,
    pub objectives: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design: Option<DesignDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchiveDoc {
    pub reference: Vec<f64>,
    pub entries: Vec<ArchiveEntryDoc>,
}

impl ArchiveDoc {
    /// Entries sorted by design id, each carrying its design.
    pub fn from_entries(reference: &[f64], entries: &[ArchiveEntry<Design>]) -> Self {
        let mut entries: Vec<ArchiveEntryDoc> = entries
            .iter()
            .map(|e| ArchiveEntryDoc {
                design_id: e.id,
                objectives: e.objectives.clone(),
                design: Some(DesignDoc::from_design(&e.item)),
            })
            .collect();
        entries.sort_by_key(|e| e.design_id);
        ArchiveDoc { reference: reference.to_vec(), entries }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let doc: ArchiveDoc = serde_json::from_str(text).context("malformed archive JSON")?;
        let arity = doc.reference.len();
        ensure!(arity == 3 || arity == 4, "archive reference must have 3 or 4 components, found {arity}");
        ensure!(doc.reference.iter().all(|r| r.is_finite() && *r > 0.0), "archive reference must be positive");
        let mut seen = std::collections::BTreeSet::new();
        for e in &doc.entries {
            ensure!(e.objectives.len() == arity, "design {} has {} objectives, expected {arity}", e.design_id, e.objectives.len());
            ensure!(seen.insert(e.design_id), "design id {} appears twice", e.design_id);
        }
        Ok(doc)
    }

    /// Entries as core archive entries; the item is the design if present.
    pub fn core_entries(&self) -> Result<Vec<ArchiveEntry<Option<Design>>>> {
        self.entries
            .iter()
            .map(|e| {
                Ok(ArchiveEntry {
                    id: e.design_id,
                    objectives: e.objectives.clone(),
                    item: e.design.as_ref().map(DesignDoc::to_design).transpose()?,
                })
            })
            .collect()
    }
}

// --------------------------------------------------------------- run log

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunLogRecord {
    pub iter: usize,
    pub global_phv: f64,
    pub archive_size: usize,
    pub evals_so_far: usize,
    pub wall_ms: u64,
}

impl RunLogRecord {
    pub fn new(r: &IterationRecord, wall_ms: u64) -> Self {
        RunLogRecord {
            iter: r.iter,
            global_phv: r.global_phv,
            archive_size: r.archive_size,
            evals_so_far: r.evals_so_far,
            wall_ms,
        }
    }
}

pub fn runlog_to_jsonl(records: &[RunLogRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn runlog_from_jsonl(text: &str) -> Result<Vec<RunLogRecord>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("malformed run-log line {}", i + 1)))
        .collect()
}

// ------------------------------------------------------------------- CSV

/// Route dump: `src,dst,hops,dist_mm,path` for every ordered pair.
pub fn write_routes_csv<W: Write>(out: W, table: &RoutingTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["src", "dst", "hops", "dist_mm", "path"])?;
    for i in 0..table.tiles() {
        for j in 0..table.tiles() {
            if i == j {
                continue;
            }
            let path: Vec<String> = table.path(i, j).iter().map(|v| v.to_string()).collect();
            w.write_record([
                i.to_string(),
                j.to_string(),
                table.hops(i, j).to_string(),
                table.dist(i, j).to_string(),
                path.join("-"),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Objective rows `design-id,lat,u_mean,u_std,temp`; `temp` is empty in PO.
pub fn write_metrics_csv<W: Write>(out: W, rows: &[(usize, ObjectiveVector)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["design-id", "lat", "u_mean", "u_std", "temp"])?;
    for (id, v) in rows {
        w.write_record([
            id.to_string(),
            v.lat.to_string(),
            v.u_mean.to_string(),
            v.u_std.to_string(),
            v.temp.map(|t| t.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv<R: Read>(input: R) -> Result<Vec<(usize, ObjectiveVector)>> {
    let mut r = csv::Reader::from_reader(input);
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        ensure!(rec.len() == 5, "metrics rows need 5 fields");
        let num = |i: usize| -> Result<f64> { Ok(rec[i].trim().parse::<f64>()?) };
        let temp = if rec[4].trim().is_empty() { None } else { Some(num(4)?) };
        out.push((rec[0].trim().parse()?, ObjectiveVector { lat: num(1)?, u_mean: num(2)?, u_std: num(3)?, temp }));
    }
    Ok(out)
}

/// External execution times: header plus `design_id,et_seconds[,temp_c]`.
pub fn read_et_csv<R: Read>(input: R) -> Result<BTreeMap<usize, Measurement>> {
    let mut r = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input);
    let header = r.headers()?.clone();
    ensure!(
        header.get(0) == Some("design_id") && header.get(1) == Some("et_seconds"),
        "execution-time CSV needs a `design_id,et_seconds[,temp_c]` header"
    );
    let mut out = BTreeMap::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = line + 2;
        ensure!(rec.len() == 2 || rec.len() == 3, "row {row}: expected 2 or 3 fields");
        let id: usize = rec[0].parse().with_context(|| format!("row {row}: bad design_id"))?;
        let et: f64 = rec[1].parse().with_context(|| format!("row {row}: bad et_seconds"))?;
        ensure!(et.is_finite() && et >= 0.0, "row {row}: execution time must be non-negative");
        let temp = match rec.get(2) {
            Some(t) if !t.is_empty() => Some(t.parse::<f64>().with_context(|| format!("row {row}: bad temp_c"))?),
            _ => None,
        };
        if out.insert(id, Measurement { et, temp }).is_some() {
            bail!("row {row}: design {id} listed twice");
        }
    }
    Ok(out)
}

/// Bar-chart input: `benchmark,variant,temp_c,et_norm`.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
pub struct BarRow {
    pub benchmark: String,
    pub variant: String,
    pub temp_c: f64,
    pub et_norm: f64,
}

pub fn read_bars_csv<R: Read>(input: R) -> Result<Vec<BarRow>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    r.deserialize().map(|row| row.context("malformed bar-chart row")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use hem3d_core::arch::build_hem3d_default;
    use hem3d_core::traffic::{synth_many_to_few, SynthParams};

    #[test]
    fn design_round_trip_is_stable() {
        let d = build_hem3d_default(&Technology::m3d(), 3).unwrap();
        let text = design_to_json(&d).unwrap();
        let back = design_from_json(&text).unwrap();
        assert_eq!(back, d);
        assert_eq!(design_to_json(&back).unwrap(), text);
    }

    #[test]
    fn profile_round_trip() {
        let d = build_hem3d_default(&Technology::tsv(), 1).unwrap();
        let (t, p) = synth_many_to_few(&d, &SynthParams { windows: 2, ..SynthParams::default() }).unwrap();
        let text = profile_to_json(&t, &p).unwrap();
        let (t2, p2) = profile_from_json(&text).unwrap();
        assert_eq!((t2, p2), (t, p));
    }

    #[test]
    fn profile_errors() {
        let diag = r#"{"windows":1,"traffic":[{"window":0,"entries":[[3,3,1.0]]}],"power":[{"window":0,"watts":[1,1,1,1]}]}"#;
        assert!(profile_from_json(diag).is_err());
        let short = r#"{"windows":2,"traffic":[{"window":0,"entries":[]},{"window":1,"entries":[]}],"power":[{"window":0,"watts":[1,1]}]}"#;
        assert!(profile_from_json(short).is_err());
        let dup = r#"{"windows":2,"traffic":[{"window":0,"entries":[]},{"window":0,"entries":[]}],"power":[{"window":0,"watts":[1]},{"window":1,"watts":[1]}]}"#;
        assert!(profile_from_json(dup).is_err());
    }

    #[test]
    fn et_csv_parsing() {
        let ok = "design_id,et_seconds,temp_c\n3,1.5,70\n4,2.0\n";
        let m = read_et_csv(ok.as_bytes()).unwrap();
        assert_eq!(m[&3], Measurement { et: 1.5, temp: Some(70.0) });
        assert_eq!(m[&4].temp, None);
        assert!(read_et_csv("3,1.5\n".as_bytes()).is_err());
    }

    #[test]
    fn metrics_round_trip() {
        let rows = vec![
            (0, ObjectiveVector { lat: 1.5, u_mean: 0.25, u_std: 0.125, temp: None }),
            (7, ObjectiveVector { lat: 2.0, u_mean: 0.5, u_std: 0.0, temp: Some(60.25) }),
        ];
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, &rows).unwrap();
        assert!(String::from_utf8(buf.clone()).unwrap().starts_with("design-id,lat,u_mean,u_std,temp\n"));
        assert_eq!(read_metrics_csv(buf.as_slice()).unwrap(), rows);
    }
}
