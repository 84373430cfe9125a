//! Run configuration: TOML text with sections, defaults filled in,
//! canonical re-serialisation and its SHA-256 hash.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use tswave::dispersion::{eps_grid, SolveOptions, K_SCAN};
use tswave::params::{resolvent_mach_limit, FlowParams, Regime};
use tswave::profile::ShearProfile;
use tswave::quad::QuadTol;
use tswave::resolvent::IterationControl;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub profile: ProfileSection,
    pub flow: FlowSection,
    pub sweep: SweepSection,
    pub grid: GridSection,
    pub tolerances: TolSection,
    pub output: OutputSection,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKindName {
    Exponential,
    Tanh,
    Tabulated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSection {
    pub kind: ProfileKindName,
    /// CSV with columns y,u or y,u,u1,u2,u3 (tabulated only).
    pub path: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FlowSection {
    pub mach: f64,
    pub eps: f64,
    pub k: f64,
    pub theta: f64,
    pub lambda: f64,
    /// Setting this selects α = prefactor·ε^exponent instead of Kε^{1/8}.
    pub alpha_exponent: Option<f64>,
    pub alpha_prefactor: Option<f64>,
    /// Phase speed [re, im] for the single-point commands; defaults to c₀.
    pub c: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// e.g. "eps=1e-10:1e-7 decades=3 per_decade=4"; empty means the single ε of [flow].
    pub spec: String,
    /// K values tried at each point; empty uses flow.k only.
    pub k_scan: Vec<f64>,
    /// Random sources per point for the resolvent study.
    pub sources: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    /// Lower bound on the truncation length; raised to 25/β₁ when needed.
    pub ymax: f64,
    pub n: usize,
    pub order: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TolSection {
    pub quad_abs: f64,
    pub quad_rel: f64,
    pub quad_max_panels: usize,
    pub newton: f64,
    pub iteration: f64,
    pub max_iter: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 20240601,
            profile: ProfileSection::default(),
            flow: FlowSection::default(),
            sweep: SweepSection::default(),
            grid: GridSection::default(),
            tolerances: TolSection::default(),
            output: OutputSection::default(),
        }
    }
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection { kind: ProfileKindName::Exponential, path: None }
    }
}

impl Default for FlowSection {
    fn default() -> Self {
        FlowSection { mach: 0.3, eps: 1e-8, k: 4.0, theta: 0.5, lambda: 0.0, alpha_exponent: None, alpha_prefactor: None, c: None }
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection { spec: String::new(), k_scan: K_SCAN.to_vec(), sources: 5 }
    }
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { ymax: 40.0, n: 2048, order: 4 }
    }
}

impl Default for TolSection {
    fn default() -> Self {
        let q = QuadTol::default();
        let it = IterationControl::default();
        TolSection {
            quad_abs: q.abs,
            quad_rel: q.rel,
            quad_max_panels: q.max_panels,
            newton: SolveOptions::default().root_tol,
            iteration: it.tol,
            max_iter: it.max_iter,
        }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out") }
    }
}

/// Parsed form of a sweep spec string.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub eps: Vec<f64>,
}

pub fn parse_sweep_spec(text: &str) -> Result<SweepSpec, CliError> {
    let bad = |m: String| CliError::Config(format!("sweep spec {text:?}: {m}"));
    let mut range: Option<(f64, f64)> = None;
    let mut decades: Option<f64> = None;
    let mut per_decade: usize = 4;
    for tok in text.split_whitespace() {
        let (key, val) = tok.split_once('=').ok_or_else(|| bad(format!("token {tok:?} is not key=value")))?;
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("{s:?} is not a number")));
        match key {
            "eps" => {
                range = Some(match val.split_once(':') {
                    Some((a, b)) => (num(a)?, num(b)?),
                    None => {
                        let v = num(val)?;
                        (v, v)
                    }
                })
            }
            "decades" => decades = Some(num(val)?),
            "per_decade" => per_decade = val.parse().map_err(|_| bad(format!("per_decade {val:?}")))?,
            _ => return Err(bad(format!("unknown key {key:?}"))),
        }
    }
    let (lo, hi) = range.ok_or_else(|| bad("missing eps=".into()))?;
    if !(lo > 0.0 && hi >= lo && hi < 1.0) {
        return Err(bad(format!("need 0 < lo <= hi < 1, got {lo}, {hi}")));
    }
    if per_decade == 0 {
        return Err(bad("per_decade must be positive".into()));
    }
    if let Some(d) = decades {
        let span = (hi / lo).log10();
        if (d - span).abs() > 1e-9 * span.max(1.0) {
            return Err(bad(format!("decades={d} but the range spans {span}")));
        }
    }
    if lo == hi {
        return Ok(SweepSpec { eps: vec![lo] });
    }
    Ok(SweepSpec { eps: eps_grid(lo, hi, per_decade) })
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    fn check(&self) -> Result<(), CliError> {
        let f = &self.flow;
        if !(f.mach > 0.0 && f.mach < 1.0) {
            return Err(CliError::Config(format!("mach = {} must lie in (0, 1)", f.mach)));
        }
        self.params()?;
        if self.grid.order != 4 {
            return Err(CliError::Config(format!("grid.order = {}: only the fourth-order scheme is implemented", self.grid.order)));
        }
        if !(self.grid.ymax > 0.0) {
            return Err(CliError::Config("grid.ymax must be positive".into()));
        }
        if self.grid.n < tswave::grid::MIN_NODES {
            return Err(CliError::Config(format!("grid.n must be at least {}", tswave::grid::MIN_NODES)));
        }
        if self.sweep.k_scan.iter().any(|&k| !(k > 0.0)) {
            return Err(CliError::Config("sweep.k_scan entries must be positive".into()));
        }
        if !self.sweep.spec.is_empty() {
            parse_sweep_spec(&self.sweep.spec)?;
        }
        if self.profile.kind == ProfileKindName::Tabulated && self.profile.path.is_none() {
            return Err(CliError::Config("profile.kind = \"tabulated\" needs profile.path".into()));
        }
        let t = &self.tolerances;
        if !(t.quad_rel > 0.0 && t.quad_abs > 0.0 && t.newton > 0.0 && t.iteration > 0.0) || t.max_iter == 0 || t.quad_max_panels == 0 {
            return Err(CliError::Config("tolerances must be positive".into()));
        }
        Ok(())
    }

    /// Warnings that do not stop parsing.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.flow.mach >= resolvent_mach_limit() {
            w.push(format!(
                "mach = {} is not below 1/sqrt(3); the resolvent and eigenmode commands will refuse it",
                self.flow.mach
            ));
        }
        if self.flow.alpha_exponent.is_some() {
            w.push("experimental wavenumber regime selected; results there are not validated".into());
        }
        w
    }

    /// Canonical TOML: every field explicit, fixed order.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn hash(&self) -> String {
        let d = Sha256::digest(self.canonical().as_bytes());
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn params(&self) -> Result<FlowParams, CliError> {
        let f = &self.flow;
        let mut p = FlowParams::new(f.mach, f.eps, f.k)?.with_theta(f.theta)?;
        p.lambda = f.lambda;
        match (f.alpha_exponent, f.alpha_prefactor) {
            (None, None) => {}
            (Some(b), pre) => p.regime = Regime::Experimental { prefactor: pre.unwrap_or(f.k), exponent: b },
            (None, Some(_)) => return Err(CliError::Config("flow.alpha_prefactor needs flow.alpha_exponent".into())),
        }
        p.validate()?;
        Ok(p)
    }

    pub fn eps_list(&self) -> Result<Vec<f64>, CliError> {
        if self.sweep.spec.trim().is_empty() {
            Ok(vec![self.flow.eps])
        } else {
            Ok(parse_sweep_spec(&self.sweep.spec)?.eps)
        }
    }

    pub fn k_scan(&self) -> Option<&[f64]> {
        if self.sweep.k_scan.is_empty() {
            None
        } else {
            Some(&self.sweep.k_scan)
        }
    }

    pub fn quad(&self) -> QuadTol {
        let t = &self.tolerances;
        QuadTol { abs: t.quad_abs, rel: t.quad_rel, max_panels: t.quad_max_panels }
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions { quad: self.quad(), root_tol: self.tolerances.newton }
    }

    pub fn iteration(&self) -> IterationControl {
        IterationControl { tol: self.tolerances.iteration, max_iter: self.tolerances.max_iter }
    }

    pub fn profile(&self) -> Result<ShearProfile, CliError> {
        match self.profile.kind {
            ProfileKindName::Exponential => Ok(ShearProfile::exponential()),
            ProfileKindName::Tanh => Ok(ShearProfile::tanh()),
            ProfileKindName::Tabulated => {
                let path = self.profile.path.as_ref().expect("checked at parse time");
                read_table(path)
            }
        }
    }
}

fn read_table(path: &Path) -> Result<ShearProfile, CliError> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    let (mut y, mut u, mut d) = (Vec::new(), Vec::new(), Vec::new());
    let mut with_derivs = None;
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let vals: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| CliError::Config(format!("{} row {}: {e}", path.display(), line + 1)))?;
        let has = match vals.len() {
            2 => false,
            5 => true,
            k => return Err(CliError::Config(format!("{} row {}: expected 2 or 5 columns, got {k}", path.display(), line + 1))),
        };
        if *with_derivs.get_or_insert(has) != has {
            return Err(CliError::Config(format!("{}: mixed column counts", path.display())));
        }
        y.push(vals[0]);
        u.push(vals[1]);
        if has {
            d.push([vals[2], vals[3], vals[4]]);
        }
    }
    Ok(ShearProfile::tabulated(y, u, with_derivs.unwrap_or(false).then_some(d))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.flow.mach, 0.3);
        assert_eq!(c.flow.theta, 0.5);
        assert_eq!(c.flow.lambda, 0.0);
        assert_eq!(c.grid.ymax, 40.0);
        assert_eq!(c.grid.n, 2048);
    }

    #[test]
    fn canonical_form_round_trips() {
        let c = RunConfig::parse("seed = 7\n[flow]\nmach = 0.2\neps = 3e-9\n[sweep]\nspec = \"eps=1e-9:1e-8 per_decade=2\"\n").unwrap();
        let again = RunConfig::parse(&c.canonical()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.canonical(), again.canonical());
        assert_eq!(c.hash(), again.hash());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(RunConfig::parse("[flow]\nmahc = 0.3\n"), Err(CliError::Config(_))));
        assert!(matches!(RunConfig::parse("colour = 1\n"), Err(CliError::Config(_))));
    }

    #[test]
    fn supersonic_rejected_and_high_subsonic_warned() {
        assert!(RunConfig::parse("[flow]\nmach = 1.2\n").is_err());
        let c = RunConfig::parse("[flow]\nmach = 0.9\n").unwrap();
        assert_eq!(c.warnings().len(), 1);
    }

    #[test]
    fn sweep_spec_thirteen_points() {
        let s = parse_sweep_spec("eps=1e-10:1e-7 decades=3 per_decade=4").unwrap();
        assert_eq!(s.eps.len(), 13);
        for w in s.eps.windows(2) {
            assert!((w[1] / w[0] - 10f64.powf(0.25)).abs() < 1e-12);
        }
        assert!(parse_sweep_spec("eps=1e-10:1e-7 decades=2").is_err());
        assert!(parse_sweep_spec("eps=1e-8").unwrap().eps == vec![1e-8]);
        assert!(parse_sweep_spec("foo=1").is_err());
    }
}
