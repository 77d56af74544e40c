//! Command-line verbs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use oledcolor::contribution::{collect_session, count_pixels_masked, key_color, CollectOptions, ContributionVector, Sampling, Trace, DEFAULT_TIMEOUT};
use oledcolor::io::atomic_write;
use oledcolor::layout::{LayoutSidecar, Rect, RegionKind};
use oledcolor::optimizer::{build_option_grid_with, Algorithm, ArbitraryOptions, GridOptions, OptionGrid};
use oledcolor::pipeline::{generate_corpus, load_frame, save_frame, CorpusSpec, RegionMask};
use oledcolor::powermodel::{calibrate_with, region_power, CalibrationOptions, DeviceSimulator, PixelPowerModel, SystemPowerModel};

use crate::profile::{ProfileStore, Selection, SOFT_SITE_CAP};
use crate::server::{self, AppState};
use crate::service;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SamplingArg {
    Full,
    Block,
}

impl From<SamplingArg> for Sampling {
    fn from(s: SamplingArg) -> Self {
        match s {
            SamplingArg::Full => Sampling::Full,
            SamplingArg::Block => Sampling::OnePerBlock,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "oledcolor", version, about = "Per-site OLED power-saving color maps")]
pub struct Cli {
    /// Power model file (output of `calibrate`; the demo model when omitted).
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    #[arg(long, global = true, default_value = "profiles")]
    pub profiles_dir: PathBuf,
    /// Quiet period that ends a paint series.
    #[arg(long, global = true, default_value_t = DEFAULT_TIMEOUT)]
    pub timeout_seconds: f64,
    #[arg(long, global = true, value_enum, default_value_t = SamplingArg::Full)]
    pub sampling: SamplingArg,
    /// Weight kept by old contributions at each update.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub decay: f64,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a power model against a simulated battery interface.
    Calibrate { config: PathBuf },
    /// Replay frames and paint traces into a site's contribution vector.
    Collect {
        /// Directory of `NAME.png|ppm` frames with `NAME.trace` and optional `NAME.layout`.
        input: PathBuf,
        #[arg(long)]
        site: String,
        #[arg(long)]
        logo_as_gui: bool,
    },
    /// Compute the 20-map option grid for a site.
    Optimize {
        #[arg(long)]
        site: String,
    },
    /// Apply a grid map to a frame.
    Transform {
        frame: PathBuf,
        #[arg(long)]
        layout: Option<PathBuf>,
        #[arg(long, required_unless_present = "grid")]
        site: Option<String>,
        #[arg(long, conflicts_with = "site")]
        grid: Option<PathBuf>,
        /// Defaults to the site's stored option.
        #[arg(long, requires = "level")]
        algorithm: Option<Algorithm>,
        /// 1..=5, or 0 for no transformation.
        #[arg(long, requires = "algorithm")]
        level: Option<u8>,
        #[arg(long)]
        logo_as_gui: bool,
        #[arg(long, short)]
        out: PathBuf,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Estimate a frame's power under the model and sampling mode.
    Estimate { frame: PathBuf },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
    /// Write a generated corpus, one directory per site.
    Corpus {
        out: PathBuf,
        /// Corpus spec file; defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
}

/// Simulated device for `calibrate`, as `key = value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub truth: SystemPowerModel,
    pub noise: f64,
    pub seed: Option<u64>,
    pub levels: u32,
    pub gray_ramp: bool,
    pub reading_period: f64,
}

impl SimConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut watts = [None; 3];
        let mut p_black = None;
        let mut pixel_count = 800 * 480;
        let (mut noise, mut seed, mut levels, mut gray_ramp) = (0.0, None, 16, false);
        let mut reading_period = DeviceSimulator::DEFAULT_PERIOD;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').with_context(|| format!("line {}: expected `key = value`", idx + 1))?;
            let (k, v) = (k.trim(), v.trim());
            let num = || v.parse::<f64>().with_context(|| format!("line {}: bad number `{v}`", idx + 1));
            match k {
                "red_watts" => watts[0] = Some(num()?),
                "green_watts" => watts[1] = Some(num()?),
                "blue_watts" => watts[2] = Some(num()?),
                "p_black" => p_black = Some(num()?),
                "pixel_count" => pixel_count = v.parse().with_context(|| format!("line {}: bad pixel_count", idx + 1))?,
                "noise" => noise = num()?,
                "seed" => seed = Some(v.parse().with_context(|| format!("line {}: bad seed", idx + 1))?),
                "levels" => levels = v.parse().with_context(|| format!("line {}: bad levels", idx + 1))?,
                "gray_ramp" => gray_ramp = v.parse().with_context(|| format!("line {}: bad bool", idx + 1))?,
                "reading_period" => reading_period = num()?,
                other => bail!("line {}: unknown key `{other}`", idx + 1),
            }
        }
        let n = pixel_count as f64;
        let per = |i: usize, name: &str| watts[i].map(|w: f64| w / n).with_context(|| format!("missing `{name}`"));
        let pixel = PixelPowerModel::new(per(0, "red_watts")?, per(1, "green_watts")?, per(2, "blue_watts")?)?;
        let truth = SystemPowerModel::new(pixel, p_black.context("missing `p_black`")?, pixel_count)?;
        Ok(Self { truth, noise, seed, levels, gray_ramp, reading_period })
    }
}

fn load_model(path: Option<&Path>) -> Result<SystemPowerModel> {
    match path {
        Some(p) => SystemPowerModel::load(p).with_context(|| format!("cannot load model {}", p.display())),
        None => Ok(SystemPowerModel::demo()),
    }
}

fn read_layout(path: Option<&Path>) -> Result<LayoutSidecar> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            Ok(LayoutSidecar::parse(&text).with_context(|| format!("bad layout {}", p.display()))?)
        }
        None => Ok(LayoutSidecar::default()),
    }
}

/// Run a non-serving command, writing results to `out`. Warnings go to stderr.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let store = ProfileStore::new(&cli.profiles_dir);
    match &cli.command {
        Command::Calibrate { config } => {
            let text = fs::read_to_string(config).with_context(|| format!("cannot read config {}", config.display()))?;
            let cfg = SimConfig::parse(&text).with_context(|| format!("bad config {}", config.display()))?;
            let dest = cli.model.as_deref().context("calibrate needs --model to write the fitted model")?;
            let mut sim = DeviceSimulator::new(cfg.truth, cfg.noise, cfg.reading_period, cfg.seed.unwrap_or(cli.seed))?;
            let fit = calibrate_with(&mut sim, CalibrationOptions { levels_per_channel: cfg.levels, gray_ramp: cfg.gray_ramp })?;
            atomic_write(dest, fit.model.to_text().as_bytes())?;
            writeln!(out, "{}", fit.model)?;
            write!(out, "{}", fit.model.to_text())?;
            writeln!(out, "r_squared = {:.12}", fit.r_squared)?;
            writeln!(out, "readings = {} ({:.0} s simulated)", sim.readings(), sim.elapsed())?;
            writeln!(out, "wrote {}", dest.display())?;
        }
        Command::Collect { input, site, logo_as_gui } => collect(cli, &store, input, site, *logo_as_gui, out)?,
        Command::Optimize { site } => {
            let model = load_model(cli.model.as_deref())?;
            let site = ProfileStore::site_key(site)?;
            let p = store.require(&site)?;
            let d = store.contribution(&p.site)?;
            if d.is_empty() {
                bail!("contribution vector for `{site}` is empty; run `collect` first");
            }
            let opts = GridOptions { arbitrary: ArbitraryOptions { seed: cli.seed, ..Default::default() }, ..Default::default() };
            let grid = build_option_grid_with(&model.pixel, &d, &opts)?;
            store.save_grid(&site, &grid.to_bytes(), &grid.available())?;
            write!(out, "{}", service::grid_table(&grid))?;
            writeln!(out, "wrote {}", store.site_dir(&site).join(crate::profile::GRID_FILE).display())?;
        }
        Command::Transform { frame, layout, site, grid, algorithm, level, logo_as_gui, out: dest, report } => {
            let model = load_model(cli.model.as_deref())?;
            let (maps, stored) = match (site, grid) {
                (Some(s), _) => {
                    let p = store.require(&ProfileStore::site_key(s)?)?;
                    (OptionGrid::read_maps(&store.grid_bytes(&p)?)?, p.option)
                }
                (None, Some(g)) => {
                    let bytes = fs::read(g).with_context(|| format!("cannot read grid {}", g.display()))?;
                    (OptionGrid::read_maps(&bytes)?, None)
                }
                (None, None) => bail!("give --site or --grid"),
            };
            let sel = match (algorithm, level) {
                (Some(a), Some(l)) => Selection { algorithm: *a, level: *l, logo_as_gui: *logo_as_gui },
                _ => {
                    let mut s = stored.context("no --algorithm/--level given and the site has no stored option")?;
                    s.logo_as_gui |= *logo_as_gui;
                    s
                }
            };
            let bytes = fs::read(frame).with_context(|| format!("cannot read frame {}", frame.display()))?;
            let result = service::transform_frame(&model, &bytes, &read_layout(layout.as_deref())?, &maps, sel)?;
            atomic_write(dest, &result.png)?;
            let json = service::report_json(&result.report);
            match report {
                Some(r) => atomic_write(r, json.as_bytes())?,
                None => writeln!(out, "{json}")?,
            }
        }
        Command::Estimate { frame } => {
            let model = load_model(cli.model.as_deref())?;
            let f = load_frame(frame).with_context(|| format!("cannot load frame {}", frame.display()))?;
            let (w, h) = f.dimensions();
            let mask = RegionMask::uniform(w, h, RegionKind::Gui);
            let counts = count_pixels_masked(&f, &mask, Rect::full(w, h), false, cli.sampling.into())?;
            let mut counts: Vec<(u32, u64)> = counts.into_iter().collect();
            counts.sort_unstable();
            let display = region_power(&model.pixel, counts.into_iter().map(|(k, n)| (key_color(k), n as f64)));
            let v = serde_json::json!({
                "watts": model.p_black + display,
                "display_watts": display,
                "p_black": model.p_black,
                "sampling": cli.sampling.to_possible_value().map(|v| v.get_name().to_string()),
            });
            writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        }
        Command::Serve { .. } => bail!("`serve` runs through `serve_blocking`"),
        Command::Corpus { out: dir, spec } => {
            let spec = match spec {
                Some(p) => CorpusSpec::parse(&fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?)?,
                None => CorpusSpec::default(),
            };
            let pages = generate_corpus(&spec)?;
            for (i, p) in pages.iter().enumerate() {
                let site_dir = dir.join(&p.site);
                fs::create_dir_all(&site_dir)?;
                let stem = site_dir.join(format!("page{i:03}"));
                save_frame(&p.frame, stem.with_extension("png"))?;
                fs::write(stem.with_extension("layout"), p.sidecar.to_text())?;
                fs::write(stem.with_extension("trace"), p.trace.to_text())?;
            }
            writeln!(out, "wrote {} pages for {} sites to {}", pages.len(), spec.sites.min(pages.len()), dir.display())?;
        }
    }
    Ok(())
}

fn collect(cli: &Cli, store: &ProfileStore, input: &Path, site: &str, logo_as_gui: bool, out: &mut dyn Write) -> Result<()> {
    let site = ProfileStore::site_key(site)?;
    let mut frames: Vec<PathBuf> = fs::read_dir(input)
        .with_context(|| format!("cannot read {}", input.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && matches!(p.extension().and_then(|e| e.to_str()), Some("png" | "ppm")))
        .collect();
    frames.sort();
    if frames.is_empty() {
        eprintln!("warning: no frames in {}; nothing collected", input.display());
        return Ok(());
    }
    let mut d = store.contribution(&site)?;
    d.decay = ContributionVector::with_decay(site.clone(), cli.decay)?.decay;
    let opts = CollectOptions { timeout: cli.timeout_seconds, sampling: cli.sampling.into(), logo_as_gui };
    let (mut ok, mut series) = (0usize, 0usize);
    for path in &frames {
        let mut one = || -> Result<usize> {
            let frame = load_frame(path)?;
            let layout_path = path.with_extension("layout");
            let sidecar = read_layout(layout_path.exists().then_some(layout_path.as_path()))?;
            let trace_path = path.with_extension("trace");
            let text = fs::read_to_string(&trace_path).with_context(|| format!("cannot read {}", trace_path.display()))?;
            let trace = Trace::parse(&text)?;
            // Count into a copy so a failing page leaves no partial update.
            let mut next = d.clone();
            let stats = collect_session(&mut next, &frame, &sidecar, &trace, opts)?;
            d = next;
            Ok(stats.series)
        };
        match one() {
            Ok(n) => {
                ok += 1;
                series += n;
            }
            Err(e) => eprintln!("error: {}: {e:#}", path.display()),
        }
    }
    if ok == 0 {
        bail!("all {} inputs failed", frames.len());
    }
    let is_new = store.load(&site)?.is_none();
    store.save_contribution(&d)?;
    if is_new {
        let n = store.list()?.len();
        if n > SOFT_SITE_CAP {
            eprintln!("warning: {n} sites collected; more than {SOFT_SITE_CAP} is more than the option workflow expects");
        }
    }
    writeln!(out, "site {site}: {} entries, total weight {:.6} pixel-seconds ({ok} frames, {series} series)", d.len(), d.total_weight())?;
    Ok(())
}

/// `serve` needs a runtime; everything else is synchronous.
pub fn serve_blocking(cli: &Cli, addr: &str) -> Result<()> {
    let model = load_model(cli.model.as_deref())?;
    let state = AppState::new(ProfileStore::new(&cli.profiles_dir), model);
    tokio::runtime::Runtime::new()?.block_on(server::serve(addr, state))
}
