//! File formats: TOML scenario and search-space files, the JSON result
//! bundle, CSV exports, and atomic artifact writes.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::FitResult;
use crate::fock::{CoherentParam, SqueezeParam};
use crate::network::{solve_t2, BeamSplitterSpec};
use crate::search::{Evaluation, PublishedRow, RowChecks, ScenarioRow, SearchSpace};
use crate::simulator::{smallv_metric, HeraldedGrid, ScenarioSpec, DEFAULT_TRUNC_IN, DEFAULT_TRUNC_OUT};

pub const TOOL_NAME: &str = env!("CARGO_PKG_NAME");
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

fn pi() -> f64 {
    PI
}
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SqueezeSection {
    #[serde(default)]
    pub s: f64,
    #[serde(default = "pi")]
    pub phi: f64,
}

impl Default for SqueezeSection {
    fn default() -> Self {
        Self { s: 0.0, phi: PI }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamsSection {
    #[serde(default)]
    pub beta0: f64,
    #[serde(default)]
    pub gamma0: f64,
    /// Phase of the `c` beam.
    #[serde(default = "pi")]
    pub theta: f64,
}

impl Default for BeamsSection {
    fn default() -> Self {
        Self {
            beta0: 0.0,
            gamma0: 0.0,
            theta: PI,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveKeyword {
    #[serde(rename = "solve")]
    Solve,
}

/// `t2` is either a number or the string `"solve"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum T2Setting {
    Value(f64),
    Solve(SolveKeyword),
}

impl Default for T2Setting {
    fn default() -> Self {
        T2Setting::Value(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplittersSection {
    #[serde(default = "one")]
    pub t1: f64,
    #[serde(default)]
    pub t2: T2Setting,
}

impl Default for SplittersSection {
    fn default() -> Self {
        Self {
            t1: 1.0,
            t2: T2Setting::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhasesSection {
    #[serde(default)]
    pub tau1: f64,
    #[serde(default)]
    pub rho1: f64,
    #[serde(default)]
    pub tau2: f64,
    #[serde(default)]
    pub rho2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    #[serde(default = "default_trunc_in")]
    pub trunc_in: usize,
    #[serde(default = "default_trunc_out")]
    pub trunc_out: usize,
}

fn default_trunc_in() -> usize {
    DEFAULT_TRUNC_IN
}
fn default_trunc_out() -> usize {
    DEFAULT_TRUNC_OUT
}

impl Default for TruncationSection {
    fn default() -> Self {
        Self {
            trunc_in: DEFAULT_TRUNC_IN,
            trunc_out: DEFAULT_TRUNC_OUT,
        }
    }
}

/// Scenario file. Every section and key is optional; an empty file is the
/// all-vacuum scenario.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub squeeze: SqueezeSection,
    #[serde(default)]
    pub beams: BeamsSection,
    #[serde(default)]
    pub splitters: SplittersSection,
    #[serde(default)]
    pub phases: PhasesSection,
    #[serde(default)]
    pub truncation: TruncationSection,
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Overrides {
    pub trunc_in: Option<usize>,
    pub trunc_out: Option<usize>,
    pub phi: Option<f64>,
    pub theta: Option<f64>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(e).context(path.display().to_string()))?;
        Self::parse(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario files always serialize")
    }

    pub fn apply(mut self, o: &Overrides) -> Self {
        if let Some(v) = o.trunc_in {
            self.truncation.trunc_in = v;
        }
        if let Some(v) = o.trunc_out {
            self.truncation.trunc_out = v;
        }
        if let Some(v) = o.phi {
            self.squeeze.phi = v;
        }
        if let Some(v) = o.theta {
            self.beams.theta = v;
        }
        self
    }

    /// Builds the spec, solving `t2` from the heralding condition if asked.
    pub fn to_spec(&self) -> Result<ScenarioSpec> {
        let p = &self.phases;
        let bs1 = BeamSplitterSpec::new(self.splitters.t1, p.tau1, p.rho1)?;
        let beta = CoherentParam::new(self.beams.beta0, 0.0)?;
        let gamma = CoherentParam::new(self.beams.gamma0, self.beams.theta)?;
        let t2 = match self.splitters.t2 {
            T2Setting::Value(t2) => t2,
            T2Setting::Solve(_) => solve_t2(beta.amplitude(), gamma.amplitude(), &bs1, p.tau2, p.rho2)?,
        };
        let spec = ScenarioSpec {
            squeeze: SqueezeParam::new(self.squeeze.s, self.squeeze.phi)?,
            beta,
            gamma,
            bs1,
            bs2: BeamSplitterSpec::new(t2, p.tau2, p.rho2)?,
            trunc_in: self.truncation.trunc_in,
            trunc_out: self.truncation.trunc_out,
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub fn load_search_space(path: &Path) -> Result<SearchSpace> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(e).context(path.display().to_string()))?;
    let space: SearchSpace = toml::from_str(&text).map_err(|e| Error::Parse(e.to_string()).context(path.display().to_string()))?;
    space.validate()?;
    Ok(space)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Norm kept by truncating the inputs.
    pub captured_mass: f64,
    /// `|β·q_b^u + γ·q_c^u|` at the resolved `t2`.
    pub zero_sum_residual: f64,
    pub off_axis_fraction: f64,
    /// `None` when `β·q_b^w = 0`.
    pub smallv: Option<f64>,
}

/// Self-describing output of `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultBundle {
    pub tool: String,
    pub version: String,
    pub scenario: ScenarioFile,
    pub row: ScenarioRow,
    pub fit: FitResult,
    pub diagnostics: Diagnostics,
    pub grid: HeraldedGrid,
}

impl ResultBundle {
    pub fn new(scenario: ScenarioFile, spec: &ScenarioSpec, evaluation: Evaluation) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            scenario,
            row: evaluation.row,
            fit: evaluation.fit,
            diagnostics: Diagnostics {
                captured_mass: evaluation.captured_mass,
                zero_sum_residual: evaluation.zero_sum_residual,
                off_axis_fraction: evaluation.grid.off_axis_fraction(),
                smallv: smallv_metric(spec).ok(),
            },
            grid: evaluation.grid,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bundles always serialize");
        s.push('\n');
        s
    }
}

fn csv_string(records: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.write_record(&r).expect("writing to memory cannot fail");
    }
    String::from_utf8(w.into_inner().expect("writing to memory cannot fail")).expect("fields are UTF-8")
}

/// `P_nm` with a header row of `m` indices and a leading column of `n`.
pub fn probabilities_csv(grid: &HeraldedGrid) -> String {
    let p = grid.probabilities();
    let header = std::iter::once("n\\m".to_string()).chain((0..p.ncols()).map(|m| m.to_string()));
    let rows = (0..p.nrows())
        .map(|n| std::iter::once(n.to_string()).chain(p.row(n).iter().map(|v| format!("{v:e}"))).collect());
    csv_string(std::iter::once(header.collect()).chain(rows))
}

pub fn rows_csv(rows: &[ScenarioRow]) -> String {
    let header = ["rank", "s", "beta0", "gamma0", "t1", "t2", "pr", "pu", "alpha", "f", "er"];
    let records = rows.iter().enumerate().map(|(i, r)| {
        vec![
            (i + 1).to_string(),
            r.s.to_string(),
            r.beta0.to_string(),
            r.gamma0.to_string(),
            r.t1.to_string(),
            r.t2.to_string(),
            format!("{:e}", r.pr),
            r.pu.to_string(),
            r.alpha.to_string(),
            r.f.to_string(),
            format!("{:e}", r.er),
        ]
    });
    csv_string(std::iter::once(header.map(String::from).to_vec()).chain(records))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchArtifact<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub space: &'a SearchSpace,
    pub rows: &'a [ScenarioRow],
}

impl<'a> SearchArtifact<'a> {
    pub fn new(space: &'a SearchSpace, rows: &'a [ScenarioRow]) -> Self {
        Self {
            tool: TOOL_NAME,
            version: TOOL_VERSION,
            space,
            rows,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifacts always serialize");
        s.push('\n');
        s
    }
}

/// Recomputed reference row next to the published one.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Line {
    pub published: PublishedRow,
    pub recomputed: ScenarioRow,
    pub deviation: Deviation,
    pub checks: RowChecks,
    pub pass: bool,
    pub captured_mass: f64,
    pub standard_norm_er: f64,
    pub f_paper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Deviation {
    pub pr: f64,
    pub pu: f64,
    pub alpha: f64,
    pub f: f64,
    /// Recomputed over published.
    pub er_ratio: f64,
}

impl Table1Line {
    pub fn new(published: PublishedRow, evaluation: &Evaluation) -> Self {
        let r = evaluation.row;
        let checks = RowChecks::compare(&published, &r);
        Self {
            published,
            recomputed: r,
            deviation: Deviation {
                pr: r.pr - published.pr,
                pu: r.pu - published.pu,
                alpha: r.alpha - published.alpha,
                f: r.f - published.f,
                er_ratio: r.er / published.er,
            },
            checks,
            pass: checks.all(),
            captured_mass: evaluation.captured_mass,
            standard_norm_er: evaluation.fit.standard_norm_er,
            f_paper: evaluation.fit.f_paper,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub trunc_in: usize,
    pub trunc_out: usize,
    pub lines: Vec<Table1Line>,
}

impl Table1Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports always serialize");
        s.push('\n');
        s
    }

    pub fn to_csv(&self, standard_norm: bool) -> String {
        let mut header: Vec<String> = [
            "state", "pr", "pr_published", "pu", "pu_published", "alpha", "alpha_published", "f", "f_published", "er",
            "er_published", "captured_mass",
        ]
        .map(String::from)
        .to_vec();
        if standard_norm {
            header.push("standard_norm_er".into());
        }
        header.push("pass".into());
        let records = self.lines.iter().map(|l| {
            let (r, p) = (&l.recomputed, &l.published);
            let mut rec = vec![
                p.name.to_string(),
                format!("{:e}", r.pr),
                p.pr.to_string(),
                r.pu.to_string(),
                p.pu.to_string(),
                r.alpha.to_string(),
                p.alpha.to_string(),
                r.f.to_string(),
                p.f.to_string(),
                format!("{:e}", r.er),
                format!("{:e}", p.er),
                l.captured_mass.to_string(),
            ];
            if standard_norm {
                rec.push(format!("{:e}", l.standard_norm_er));
            }
            rec.push(l.pass.to_string());
            rec
        });
        csv_string(std::iter::once(header).chain(records))
    }

    /// Human-readable table; `Er` in units of 10⁻⁵ as published.
    pub fn to_text(&self, standard_norm: bool) -> String {
        let mut out = String::new();
        let mark = |ok: bool| if ok { ' ' } else { '*' };
        writeln!(
            out,
            "state     Pr (pub)          Pu % (pub)        alpha (pub)       f (pub)           Er e-5 (pub)    {}verdict",
            if standard_norm { "Er_std e-5  " } else { "" }
        )
        .unwrap();
        for l in &self.lines {
            let (r, p, c) = (&l.recomputed, &l.published, &l.checks);
            write!(
                out,
                "{:<8}  {:.4}{} ({:.3})   {:6.2}{} ({:4.1})    {:.4}{} ({:.3})   {:.4}{} ({:.3})   {:6.2}{} ({:5.2})   ",
                p.name,
                r.pr,
                mark(c.pr),
                p.pr,
                100.0 * r.pu,
                mark(c.pu),
                100.0 * p.pu,
                r.alpha,
                mark(c.alpha),
                p.alpha,
                r.f,
                mark(c.f),
                p.f,
                r.er * 1e5,
                mark(c.er),
                p.er * 1e5
            )
            .unwrap();
            if standard_norm {
                write!(out, "{:9.3}   ", l.standard_norm_er * 1e5).unwrap();
            }
            writeln!(out, "{}", if l.pass { "PASS" } else { "FAIL" }).unwrap();
        }
        out
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never see a partial artifact.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
