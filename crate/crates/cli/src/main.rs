use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use footprint::ingest::{CrsMode, Source};
use footprint::modeling::KMeansConfig;
use footprint::pipeline::{self, stages, PipelineConfig, SourceKind, Store, WeightsConfig};
use footprint::synth::{generate, CityScenario};
use footprint::zones::load_zones;
use footprint::{Error, Result};

/// Tourist footprint analysis of geotagged social-media events.
///
/// Every option can also be set in the `--config` file; flags win.
#[derive(Parser)]
#[command(name = "footprint", version)]
struct Cli {
    /// Pipeline config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a raw NDJSON event file into a store.
    Ingest {
        #[arg(long)]
        source: SourceKind,
        #[arg(long)]
        crs: Option<CrsMode>,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label users as tourists or residents and split out check-ins.
    Classify {
        #[arg(long)]
        threshold_days: Option<i64>,
        #[arg(long)]
        checkin_pattern: Option<String>,
        #[arg(long = "in")]
        input: PathBuf,
        /// Defaults to the input store.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a zones file.
    Zones {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        crs: Option<CrsMode>,
    },
    /// Join tourist events to zones and compute densities.
    Aggregate {
        #[arg(long)]
        zones: Option<PathBuf>,
        #[arg(long)]
        crs: Option<CrsMode>,
        #[command(flatten)]
        store: StoreArg,
    },
    /// Descriptive statistics of raw and rescaled densities.
    Stats {
        #[command(flatten)]
        store: StoreArg,
    },
    /// Pairwise regressions between sources.
    Ols {
        #[command(flatten)]
        store: StoreArg,
        #[command(flatten)]
        scale: Scale,
    },
    /// K-means typology of zones.
    Kmeans {
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        restarts: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        store: StoreArg,
        #[command(flatten)]
        scale: Scale,
    },
    /// Global Moran's I.
    Moran {
        #[command(flatten)]
        spatial: Spatial,
    },
    /// Local Moran (LISA) clusters.
    Lisa {
        #[command(flatten)]
        spatial: Spatial,
    },
    /// Fuse significant High-High clusters into zone classes.
    Typology {
        /// Re-threshold the stored LISA results.
        #[arg(long)]
        alpha: Option<f64>,
        /// Reference point as `X,Y` (lon,lat or projected meters).
        #[arg(long, value_parser = parse_center)]
        center: Option<[f64; 2]>,
        #[arg(long)]
        ring_m: Option<f64>,
        #[command(flatten)]
        store: StoreArg,
    },
    /// Generate a synthetic city from a scenario file.
    Synth {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage from the config file.
    Run {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Plain-text summary of a store.
    Report {
        #[command(flatten)]
        store: StoreArg,
    },
}

#[derive(Args)]
struct StoreArg {
    /// Store directory; defaults to the config's `out`.
    #[arg(long, alias = "in")]
    store: Option<PathBuf>,
}

#[derive(Args)]
struct Scale {
    /// Analyze raw densities instead of the 0–1000 rescale.
    #[arg(long)]
    raw: bool,
}

#[derive(Args)]
struct Spatial {
    /// One source; all sources in the store when omitted.
    #[arg(long)]
    source: Option<Source>,
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long)]
    threshold_m: Option<f64>,
    #[arg(long)]
    row_standardize: bool,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    store: StoreArg,
    #[command(flatten)]
    scale: Scale,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    zones: Option<PathBuf>,
    #[arg(long)]
    crs: Option<CrsMode>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threshold_days: Option<i64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    permutations: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    threshold_m: Option<f64>,
    #[arg(long)]
    row_standardize: bool,
    #[arg(long, value_parser = parse_center)]
    center: Option<[f64; 2]>,
    #[arg(long)]
    ring_m: Option<f64>,
    #[arg(long)]
    checkin_pattern: Option<String>,
    #[command(flatten)]
    scale: Scale,
}

fn parse_center(s: &str) -> std::result::Result<[f64; 2], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [x, y] => match (x.parse::<f64>(), y.parse::<f64>()) {
            (Ok(x), Ok(y)) if x.is_finite() && y.is_finite() => Ok([x, y]),
            _ => Err(format!("`{s}` is not a pair of numbers")),
        },
        _ => Err(format!("expected X,Y, got `{s}`")),
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

impl StoreArg {
    fn open(&self, cfg: &PipelineConfig) -> Result<Store> {
        Store::existing(self.store.clone().unwrap_or_else(|| cfg.out.clone()))
    }
}

impl Overrides {
    fn apply(self, cfg: &mut PipelineConfig) {
        let cwd = Path::new(".");
        if let Some(v) = self.zones {
            cfg.zones = cwd.join(v);
        }
        if let Some(v) = self.out {
            cfg.out = cwd.join(v);
        }
        set(&mut cfg.crs, self.crs);
        set(&mut cfg.seed, self.seed);
        set(&mut cfg.threshold_days, self.threshold_days);
        set(&mut cfg.k, self.k);
        set(&mut cfg.restarts, self.restarts);
        set(&mut cfg.permutations, self.permutations);
        set(&mut cfg.alpha, self.alpha);
        set(&mut cfg.weights.threshold_m, self.threshold_m);
        set(&mut cfg.ring_m, self.ring_m);
        if self.row_standardize {
            cfg.weights.row_standardize = true;
        }
        if self.center.is_some() {
            cfg.center = self.center;
        }
        if self.checkin_pattern.is_some() {
            cfg.checkin_pattern = self.checkin_pattern;
        }
        if self.scale.raw {
            cfg.rescale = false;
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

/// Refresh the map layer after a stage that adds per-zone results.
fn refresh_map(store: &Store) -> Result<()> {
    stages::export_map(store)?;
    Ok(())
}

fn spatial(cfg: &PipelineConfig, args: Spatial, local: bool) -> Result<()> {
    let store = args.store.open(cfg)?;
    let table = store.read_table()?;
    let weights = WeightsConfig {
        threshold_m: args.threshold_m.unwrap_or(cfg.weights.threshold_m),
        row_standardize: args.row_standardize || cfg.weights.row_standardize,
    };
    let permutations = args.permutations.unwrap_or(cfg.permutations);
    let alpha = args.alpha.unwrap_or(cfg.alpha);
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let seed = args.seed.unwrap_or(cfg.seed);
    let rescaled = cfg.rescale && !args.scale.raw;
    let w = stages::weights(&table, &weights)?;
    let sources = match args.source {
        Some(s) => vec![s],
        None => table.sources.clone(),
    };
    for s in sources {
        if local {
            let r = stages::lisa(&store, &table, s, &w, permutations, alpha, seed, rescaled)?;
            let hh = r.zones.iter().filter(|z| z.map_label() == "HH").count();
            println!("{s}: {} zones, {hh} significant HH at alpha {alpha}", r.len());
        } else {
            let m = stages::moran(&store, &table, s, &w, permutations, seed, rescaled)?;
            let show = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
            println!(
                "{s}: I = {:.4}, E[I] = {:.4}, z = {}, p = {}, permutation p = {}",
                m.i,
                m.expected,
                show(m.z_score),
                show(m.p_value),
                show(m.perm_p)
            );
        }
    }
    if local {
        refresh_map(&store)?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = load_config(cli.config.as_deref())?;
    set(&mut cfg.jobs, cli.jobs);
    let jobs = cfg.jobs;
    pipeline::with_jobs(jobs, move || dispatch(cli.command, cfg))?
}

fn dispatch(command: Command, mut cfg: PipelineConfig) -> Result<()> {
    match command {
        Command::Ingest { source, crs, input, out } => {
            let store = Store::open(out)?;
            let (_, record) = stages::ingest(&store, source, &input, crs.unwrap_or(cfg.crs))?;
            println!(
                "{}: accepted {}, rejected {}",
                source.as_str(),
                record.get("accepted").unwrap_or(0),
                record.get("rejected").unwrap_or(0)
            );
        }
        Command::Classify { threshold_days, checkin_pattern, input, out } => {
            set(&mut cfg.threshold_days, threshold_days);
            if checkin_pattern.is_some() {
                cfg.checkin_pattern = checkin_pattern;
            }
            if cfg.threshold_days < 1 {
                return Err(Error::Config(format!("threshold-days must be at least 1, got {}", cfg.threshold_days)));
            }
            let rule = cfg.checkin_rule()?;
            let from = Store::existing(&input)?;
            let mut platforms = Vec::new();
            for kind in [SourceKind::Photo, SourceKind::Tweet] {
                if let Some(events) = from.read_ingest(kind)? {
                    platforms.push((kind, events));
                }
            }
            if platforms.is_empty() {
                return Err(Error::Data(format!("no ingested events in {}", input.display())));
            }
            let to = Store::open(out.unwrap_or(input))?;
            let (_, records) = stages::classify(&to, platforms, cfg.threshold_days, &rule)?;
            for r in records {
                let counts: Vec<String> = r.counts.iter().map(|(k, v)| format!("{k} {v}")).collect();
                println!("{} {}: {}", r.stage, r.source.unwrap_or_default(), counts.join(", "));
            }
        }
        Command::Zones { input, crs } => {
            let zones = load_zones(&input, crs.unwrap_or(cfg.crs))?;
            let area: f64 = zones.iter().map(|z| z.area_ha).sum();
            println!("{} zones, total area {area:.2} ha", zones.len());
        }
        Command::Aggregate { zones, crs, store } => {
            let store = store.open(&cfg)?;
            let zones = zones.unwrap_or_else(|| cfg.zones.clone());
            if !zones.is_file() {
                return Err(Error::Config(format!("zones file {} not found", zones.display())));
            }
            let tourists = store.read_tourists()?;
            let (table, records) = stages::aggregate(&store, &zones, crs.unwrap_or(cfg.crs), &tourists)?;
            for r in records {
                println!(
                    "{}: {} events, {} assigned, {} unassigned",
                    r.source.clone().unwrap_or_default(),
                    r.get("events").unwrap_or(0),
                    r.get("assigned").unwrap_or(0),
                    r.get("unassigned").unwrap_or(0)
                );
            }
            println!("{} zones", table.len());
            refresh_map(&store)?;
        }
        Command::Stats { store } => {
            let store = store.open(&cfg)?;
            let rows = stages::stats(&store, &store.read_table()?)?;
            for r in rows {
                println!("{}: max {:.4}, sum {:.4}, mean {:.4}, sd {:.4}", r.source, r.raw.max, r.raw.sum, r.raw.mean, r.raw.sd);
            }
        }
        Command::Ols { store, scale } => {
            let store = store.open(&cfg)?;
            let fits = stages::ols(&store, &store.read_table()?, cfg.rescale && !scale.raw)?;
            if fits.is_empty() {
                return Err(Error::Data("regressions need at least two sources".into()));
            }
            for p in fits {
                println!("{} on {}: adj r2 {:.4}, slope {:.4}, p {:.3e}", p.y, p.x, p.fit.adj_r2, p.fit.slope, p.fit.p_value);
            }
            refresh_map(&store)?;
        }
        Command::Kmeans { k, restarts, seed, store, scale } => {
            let store = store.open(&cfg)?;
            let kcfg = KMeansConfig {
                k: k.unwrap_or(cfg.k),
                restarts: restarts.unwrap_or(cfg.restarts),
                seed: seed.unwrap_or(cfg.seed),
                ..KMeansConfig::default()
            };
            let model = stages::kmeans(&store, &store.read_table()?, &kcfg, cfg.rescale && !scale.raw)?;
            println!("k = {}, inertia {:.4}, group sizes {:?}", model.k, model.inertia, model.group_sizes());
            refresh_map(&store)?;
        }
        Command::Moran { spatial: args } => spatial(&cfg, args, false)?,
        Command::Lisa { spatial: args } => spatial(&cfg, args, true)?,
        Command::Typology { alpha, center, ring_m, store } => {
            let store = store.open(&cfg)?;
            let table = store.read_table()?;
            let mut lisa = stages::stored_lisa(&store, &table)?;
            if let Some(a) = alpha {
                if !(a > 0.0 && a < 1.0) {
                    return Err(Error::Config(format!("alpha must be in (0, 1), got {a}")));
                }
                for (_, r) in &mut lisa {
                    *r = r.with_alpha(a);
                }
            }
            let refs: Vec<_> = lisa.iter().map(|(s, r)| (*s, r)).collect();
            let (classes, _) = stages::typology(&store, &table, &refs, center.or(cfg.center), ring_m.unwrap_or(cfg.ring_m))?;
            let mut counts = std::collections::BTreeMap::new();
            for c in &classes {
                *counts.entry(c.class_label).or_insert(0) += 1;
            }
            let parts: Vec<String> = counts.iter().map(|(k, v)| format!("{k} {v}")).collect();
            println!("{}", parts.join(", "));
            refresh_map(&store)?;
        }
        Command::Synth { scenario, out } => {
            let scenario = CityScenario::load(&scenario).map_err(|e| match e {
                Error::Io { path, source } => Error::Config(format!("cannot read scenario {}: {source}", path.display())),
                e => e,
            })?;
            let city = generate(&scenario)?;
            let files = city.write(&out)?;
            println!(
                "{} zones, {} photo events, {} tweet events; config {}",
                scenario.rows * scenario.cols,
                city.photos.len(),
                city.tweets.len(),
                files.config.display()
            );
        }
        Command::Run { overrides } => {
            overrides.apply(&mut cfg);
            let m = pipeline::run_pipeline(&cfg)?;
            println!("{:?}: {} outputs in {}", m.status, m.outputs.len(), cfg.out.display());
        }
        Command::Report { store } => {
            let store = store.open(&cfg)?;
            print!("{}", pipeline::report(&store, &cfg.display)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.kind().exit_code() as u8)
        }
    }
}
