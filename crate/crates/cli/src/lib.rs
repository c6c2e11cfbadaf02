//! Config-file driven front end: BER campaigns, EXIT curves, complexity tables.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use tbicm::channel::FadingModel;
use tbicm::complexity::{self, BitWidths};
use tbicm::constellation::Modulation;
use tbicm::demapper::DemapCase;
use tbicm::exit::{self, ExitCurve};
use tbicm::interleaving::CodeRate;
use tbicm::receiver::{self, BerPoint, CampaignConfig, Link, LinkConfig, Schedule, StopRule};
use tbicm::{Error, Result};

/// Rotation given as degrees, `"off"` or `"default"`.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum Rotation {
    Degrees(f64),
    Keyword(String),
}

impl Default for Rotation {
    fn default() -> Self {
        Rotation::Keyword("default".into())
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct EbN0Grid {
    pub start: f64,
    pub stop: f64,
    #[serde(default = "default_step")]
    pub step: f64,
}

fn default_step() -> f64 {
    1.0
}

impl EbN0Grid {
    pub fn points(&self) -> Result<Vec<f64>> {
        if self.step.is_nan() || self.step <= 0.0 || self.stop < self.start {
            return Err(key_error("ebn0", "needs start <= stop and a positive step"));
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..n)
            .map(|i| ((self.start + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect())
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StopSection {
    #[serde(default = "default_max_frames")]
    pub max_frames: u64,
    #[serde(default = "default_target_errors")]
    pub target_frame_errors: u64,
}

fn default_max_frames() -> u64 {
    StopRule::default().max_frames
}

fn default_target_errors() -> u64 {
    StopRule::default().target_frame_errors
}

impl Default for StopSection {
    fn default() -> Self {
        Self {
            max_frames: default_max_frames(),
            target_frame_errors: default_target_errors(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct ExitSection {
    /// Operating point; defaults to the first point of the Eb/N0 grid.
    pub ebn0_db: Option<f64>,
    #[serde(default)]
    pub demap_depths: Vec<usize>,
    /// IA values; defaults to the standard grid.
    pub ia_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, PartialEq, Default)]
#[serde(deny_unknown_fields)]
pub struct ComplexitySection {
    pub n_it: Option<usize>,
    pub cases: Option<Vec<String>>,
    pub rates: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub modulation: String,
    pub code_rate: String,
    #[serde(default)]
    pub rotation_deg: Rotation,
    #[serde(default)]
    pub erasure_p: f64,
    #[serde(default = "default_channel")]
    pub channel: String,
    #[serde(default = "default_info_bits")]
    pub info_bits: usize,
    #[serde(default)]
    pub schedules: Vec<String>,
    pub ebn0: Option<EbN0Grid>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub workers: Option<usize>,
    #[serde(default)]
    pub stop: StopSection,
    #[serde(default = "default_case")]
    pub demap_case: String,
    #[serde(default)]
    pub cold_restart: bool,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub exit: ExitSection,
    #[serde(default)]
    pub complexity: ComplexitySection,
}

fn default_channel() -> String {
    "fast_rayleigh".into()
}

fn default_info_bits() -> usize {
    1536
}

fn default_seed() -> u64 {
    1
}

fn default_case() -> String {
    "CASE1".into()
}

fn key_error(key: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("config key `{key}`: {msg}"))
}

fn keyed<T>(key: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| key_error(key, e))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Ok((Self::from_toml(&text)?, text))
    }

    pub fn modulation(&self) -> Result<Modulation> {
        keyed("modulation", self.modulation.parse())
    }

    pub fn rate(&self) -> Result<CodeRate> {
        keyed("code_rate", self.code_rate.parse())
    }

    pub fn rotation(&self, modulation: Modulation) -> Result<f64> {
        match &self.rotation_deg {
            Rotation::Degrees(d) => Ok(*d),
            Rotation::Keyword(k) if k.eq_ignore_ascii_case("off") => Ok(0.0),
            Rotation::Keyword(k) if k.eq_ignore_ascii_case("default") => Ok(modulation.default_rotation_deg()),
            Rotation::Keyword(k) => Err(key_error("rotation_deg", format!("expected degrees, \"off\" or \"default\", got '{k}'"))),
        }
    }

    pub fn schedules(&self) -> Result<Vec<Schedule>> {
        if self.schedules.is_empty() {
            return Err(key_error("schedules", "at least one schedule is required"));
        }
        self.schedules.iter().map(|s| keyed("schedules", s.parse())).collect()
    }

    pub fn link(&self) -> Result<LinkConfig> {
        let modulation = self.modulation()?;
        let mut link = LinkConfig::new(modulation, self.rate()?, self.info_bits);
        link.rotation_deg = self.rotation(modulation)?;
        link.fading = keyed("channel", self.channel.parse::<FadingModel>())?;
        if !(0.0..1.0).contains(&self.erasure_p) {
            return Err(key_error("erasure_p", format!("{} outside [0, 1)", self.erasure_p)));
        }
        link.erasure_prob = self.erasure_p;
        link.demap_case = keyed("demap_case", complexity::parse_case(&self.demap_case))?;
        link.warm_start = !self.cold_restart;
        if self.info_bits == 0 || !self.info_bits.is_multiple_of(2) {
            return Err(key_error("info_bits", format!("must be a positive even number, got {}", self.info_bits)));
        }
        Ok(link)
    }

    pub fn ebn0_points(&self) -> Result<Vec<f64>> {
        self.ebn0
            .as_ref()
            .ok_or_else(|| key_error("ebn0", "missing Eb/N0 grid"))?
            .points()
    }
}

/// Worker count: explicit flag, then `SIM_WORKERS`, then the config, then 1.
pub fn resolve_workers(flag: Option<usize>, config: Option<usize>) -> Result<usize> {
    if let Some(w) = flag {
        return Ok(w.max(1));
    }
    if let Ok(v) = std::env::var("SIM_WORKERS") {
        return v
            .trim()
            .parse::<usize>()
            .map(|w| w.max(1))
            .map_err(|_| Error::Config(format!("SIM_WORKERS must be a positive integer, got '{v}'")));
    }
    Ok(config.unwrap_or(1).max(1))
}

fn echo_header(kind: &str, config_text: &str, seed: u64, workers: usize) -> String {
    let mut s = format!("# tbicm {kind}\n# seed = {seed}\n# workers = {workers}\n");
    for line in config_text.lines() {
        let _ = writeln!(s, "# | {line}");
    }
    s
}

/// Filesystem-safe scheme name.
pub fn scheme_slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '-' })
        .collect()
}

/// Output of `ber`: the combined CSV and one CSV per schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct BerOutput {
    pub combined: String,
    pub per_scheme: Vec<(String, String)>,
    pub points: Vec<BerPoint>,
}

pub fn cmd_ber(cfg: &RunConfig, config_text: &str, seed: u64, workers: usize) -> Result<BerOutput> {
    let campaign = CampaignConfig {
        link: cfg.link()?,
        schedules: cfg.schedules()?,
        ebn0_db: cfg.ebn0_points()?,
        seed,
        workers,
        stop: StopRule {
            max_frames: cfg.stop.max_frames,
            target_frame_errors: cfg.stop.target_frame_errors,
        },
    };
    log::info!(
        "ber: {} schedules x {} points, seed {seed}, {workers} workers",
        campaign.schedules.len(),
        campaign.ebn0_db.len()
    );
    let points = receiver::run_ber_campaign(&campaign)?;
    let header = echo_header("ber", config_text, seed, workers);
    let mut combined = format!("{header}{}\n", BerPoint::CSV_HEADER);
    for p in &points {
        combined.push_str(&p.csv_row());
        combined.push('\n');
    }
    let per_scheme = campaign
        .schedules
        .iter()
        .map(|s| {
            let name = s.to_string();
            let mut body = format!("{header}{}\n", BerPoint::CSV_HEADER);
            for p in points.iter().filter(|p| p.scheme == name) {
                body.push_str(&p.csv_row());
                body.push('\n');
            }
            (name, body)
        })
        .collect();
    Ok(BerOutput {
        combined,
        per_scheme,
        points,
    })
}

/// Curves for every demapping depth, rotated and unrotated.
pub fn cmd_exit(cfg: &RunConfig, config_text: &str, seed: u64, workers: usize) -> Result<(String, Vec<ExitCurve>)> {
    let base = cfg.link()?;
    let ebn0 = match cfg.exit.ebn0_db {
        Some(v) => v,
        None => cfg.ebn0_points()?[0],
    };
    let depths = if cfg.exit.demap_depths.is_empty() {
        vec![0]
    } else {
        cfg.exit.demap_depths.clone()
    };
    let grid = cfg.exit.ia_grid.clone().unwrap_or_else(exit::default_ia_grid);
    if grid.iter().any(|v| !(0.0..1.0).contains(v)) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(key_error("exit.ia_grid", "values must increase strictly inside [0, 1)"));
    }
    let rotated_deg = if base.rotation_deg != 0.0 {
        base.rotation_deg
    } else {
        base.modulation.default_rotation_deg()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let mut curves = Vec::new();
    for rotation in [rotated_deg, 0.0] {
        let link = Link::new(LinkConfig {
            rotation_deg: rotation,
            ..base.clone()
        })?;
        let frame = exit::ExitFrame::new(&link, ebn0, seed)?;
        for &d in &depths {
            curves.push(pool.install(|| exit::decoder_transfer_on(&link, &frame, d, ebn0, &grid, seed))?);
        }
    }
    let mut csv = echo_header("exit", config_text, seed, workers);
    csv.push_str(ExitCurve::CSV_HEADER);
    csv.push('\n');
    for c in &curves {
        csv.push_str(&c.csv_rows());
    }
    Ok((csv, curves))
}

/// Options of the `complexity` command.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexityOptions {
    pub n_it: usize,
    pub cases: Vec<DemapCase>,
    pub rates: Vec<CodeRate>,
}

impl Default for ComplexityOptions {
    fn default() -> Self {
        Self {
            n_it: 6,
            cases: vec![DemapCase::Recompute, DemapCase::StoreReuse],
            rates: vec![CodeRate::new(1, 2).expect("valid"), CodeRate::new(6, 7).expect("valid")],
        }
    }
}

impl ComplexityOptions {
    /// Flags override config entries, which override the defaults.
    pub fn resolve(
        section: Option<&ComplexitySection>,
        n_it: Option<usize>,
        cases: Option<&[String]>,
        rates: Option<&[String]>,
    ) -> Result<Self> {
        let mut o = Self::default();
        let empty = ComplexitySection::default();
        let sec = section.unwrap_or(&empty);
        if let Some(n) = n_it.or(sec.n_it) {
            o.n_it = n;
        }
        if let Some(c) = cases.or(sec.cases.as_deref()) {
            o.cases = c.iter().map(|s| complexity::parse_case(s)).collect::<Result<_>>()?;
        }
        if let Some(r) = rates.or(sec.rates.as_deref()) {
            o.rates = r.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        if o.cases.is_empty() || o.rates.is_empty() {
            return Err(Error::Config("complexity needs at least one case and one rate".into()));
        }
        Ok(o)
    }
}

/// Returns (gain CSV, unit CSV, human-readable table).
pub fn cmd_complexity(opts: &ComplexityOptions) -> Result<(String, String, String)> {
    let report = complexity::emit_tables(opts.n_it, &opts.rates, &opts.cases, &BitWidths::default())?;
    let header = format!("# tbicm complexity\n# n_it = {}\n", opts.n_it);
    Ok((
        format!("{header}{}", report.gains_csv()),
        format!("{header}{}", report.units_csv()),
        report.to_string(),
    ))
}

/// `dir/stem_suffix.ext` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    path.with_file_name(format!("{stem}_{suffix}.{ext}"))
}

pub fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))?;
    }
    std::fs::write(path, body).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}
