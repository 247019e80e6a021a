//! CSV, gnuplot and JSON writers for a finished run.
//!
//! Every float is printed with 17 significant digits so that outputs are
//! byte-reproducible and round-trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::flow::Form;
use crate::run::RunOutput;

pub const TOOL_NAME: &str = "ns-lab";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// One row per (snapshot, sample), ordered by time then sample index.
pub fn fronts_csv(out: &RunOutput) -> String {
    let n = out.prepared.setup.chart.dim();
    let axes = out.prepared.mesh.grid.axes.len();
    let mut header = vec!["t".to_string(), "sample_index".to_string()];
    header.extend((1..=axes).map(|a| format!("q{a}")));
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("N{i}")));
    header.extend(["nu".to_string(), "phase".to_string()]);
    let mut s = header.join(",");
    s.push('\n');
    for (t, front) in &out.result.fronts {
        for i in 0..front.len() {
            let mut row = vec![num(*t), i.to_string()];
            row.extend(front.grid.params(i).into_iter().map(num));
            row.extend(front.points[i].iter().copied().map(num));
            row.extend(front.normals[i].iter().copied().map(num));
            row.push(num(front.nu[i]));
            row.push(num(front.phase[i]));
            s.push_str(&row.join(","));
            s.push('\n');
        }
    }
    s
}

/// Recorded states of every sample, with H, Ω and W where monitored.
pub fn trajectories_csv(out: &RunOutput) -> String {
    let n = out.prepared.setup.chart.dim();
    let m = if out.result.form == Form::Newtonian {
        'u'
    } else {
        'p'
    };
    let mut header = vec!["t".to_string(), "sample_index".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=n).map(|i| format!("{m}{i}")));
    header.extend(["s", "H", "Omega", "W"].map(String::from));
    let mut s = header.join(",");
    s.push('\n');
    for (i, traj) in out.result.trajectories.iter().enumerate() {
        for (sample, mon) in traj.samples.iter().zip(&traj.monitors) {
            let mut row = vec![num(sample.t), i.to_string()];
            row.extend(sample.x.iter().copied().map(num));
            row.extend(sample.m.iter().copied().map(num));
            row.push(num(sample.s));
            row.push(opt(mon.values.h));
            row.push(opt(mon.values.omega));
            row.push(opt(mon.values.w));
            s.push_str(&row.join(","));
            s.push('\n');
        }
    }
    s
}

/// Front positions as gnuplot index blocks, one per snapshot. Closed
/// curves repeat their first point.
pub fn fronts_dat(out: &RunOutput) -> String {
    let mut s = String::new();
    for (t, front) in &out.result.fronts {
        let _ = writeln!(s, "# t = {}", num(*t));
        let axes = &front.grid.axes;
        let row = |s: &mut String, i: usize| {
            let cols: Vec<String> = front.points[i].iter().copied().map(num).collect();
            let _ = writeln!(s, "{}", cols.join(" "));
        };
        if axes.len() == 1 {
            (0..front.len()).for_each(|i| row(&mut s, i));
            if axes[0].periodic {
                row(&mut s, 0);
            }
        } else {
            let last = axes.last().expect("non-empty grid").samples;
            for i in 0..front.len() {
                row(&mut s, i);
                if (i + 1) % last == 0 {
                    s.push('\n');
                }
            }
        }
        s.push_str("\n\n");
    }
    s
}

#[derive(Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct Report<'a> {
    tool: Tool,
    form: Form,
    samples: usize,
    epsilon: Option<f64>,
    diagnostics: &'a [crate::front::SnapshotDiagnostics],
    conservation: crate::run::ConservationSummary,
    config: serde_json::Value,
}

/// JSON with keys sorted and floats at 17 significant digits.
pub fn to_json_sci<T: Serialize>(value: &T) -> String {
    // Through Value so that object keys come out sorted.
    let v = serde_json::to_value(value).expect("report serializes");
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Sci17::default());
    v.serialize(&mut ser).expect("in-memory write");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

pub fn report_json(out: &RunOutput) -> String {
    let config =
        serde_json::from_str(&out.config.canonical_json()).expect("canonical config parses");
    to_json_sci(&Report {
        tool: Tool {
            name: TOOL_NAME,
            version: TOOL_VERSION,
        },
        form: out.result.form,
        samples: out.prepared.mesh.len(),
        epsilon: out.prepared.epsilon,
        diagnostics: &out.result.diagnostics,
        conservation: out.conservation,
        config,
    })
}

/// Writes all outputs into `dir`, creating it if needed.
pub fn write_all(out: &RunOutput, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut files = vec![("fronts.csv", fronts_csv(out))];
    if out.config.output.trajectories {
        files.push(("trajectories.csv", trajectories_csv(out)));
    }
    if out.config.output.gnuplot {
        files.push(("fronts.dat", fronts_dat(out)));
    }
    files.push(("report.json", report_json(out)));
    let mut written = Vec::new();
    for (name, body) in files {
        let path = dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}

/// Pretty printer that writes floats in `{:.16e}` form.
#[derive(Default)]
struct Sci17 {
    pretty: PrettyFormatter<'static>,
}

impl Formatter for Sci17 {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(num(v).as_bytes())
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}
