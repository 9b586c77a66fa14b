use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use edgevr_core::baselines::{run_to_dir, PolicySpec, RateRule};
use edgevr_core::compute::Placement;
use edgevr_core::env::{load_scenario, server, Settings};
use edgevr_core::synth::AssetSpec;
use edgevr_core::video::SyntheticVideo;

#[derive(Parser)]
#[command(
    name = "sim",
    version,
    about = "Multi-user edge-assisted 360-degree streaming simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a baseline policy and write telemetry and metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        policy: PolicyName,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
        #[arg(long)]
        out: PathBuf,
        /// Base seed; episode i resets with a seed derived from it.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Answer JSON-lines protocol requests on stdio, or on TCP with --tcp.
    Serve {
        #[arg(long)]
        config: PathBuf,
        /// Port (or host:port) to listen on.
        #[arg(long)]
        tcp: Option<String>,
    },
    /// Generate a synthetic asset set and scenario file.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 9)]
        videos: usize,
        #[arg(long, default_value_t = 8)]
        traces: usize,
        #[arg(long, default_value_t = 60)]
        gops: usize,
        #[arg(long, default_value_t = 7)]
        layers: usize,
        #[arg(long, default_value_t = 4)]
        users: usize,
        /// Viewport traces per video; 0 leaves viewports to the environment.
        #[arg(long, default_value_t = 6)]
        viewports: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Load a scenario and report what it contains.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyName {
    /// Decode and render on the ECU, largest affordable layer count.
    EcuAll,
    /// Decode and render on the headset, largest affordable layer count.
    HeadsetAll,
    /// Decode on the ECU, render on the headset, layers from buffer level.
    BufferRate,
    /// Uniformly random layers and placements.
    Random,
}

impl PolicyName {
    fn spec(self, seed: u64) -> PolicySpec {
        let affordable = RateRule::MaxAffordable { margin_s: 0.0 };
        match self {
            PolicyName::EcuAll => PolicySpec::FixedPlacement {
                placement: Placement::EcuBoth,
                rate: affordable,
            },
            PolicyName::HeadsetAll => PolicySpec::FixedPlacement {
                placement: Placement::HeadsetBoth,
                rate: affordable,
            },
            PolicyName::BufferRate => PolicySpec::FixedPlacement {
                placement: Placement::EcuDecodeHeadsetRender,
                rate: RateRule::BufferThreshold {
                    reservoir_s: 1.0,
                    cushion_s: 2.0,
                },
            },
            PolicyName::Random => PolicySpec::Random { seed },
        }
    }
}

fn load(config: &Path) -> Result<Arc<edgevr_core::env::Scenario>> {
    let scenario =
        load_scenario(config).with_context(|| format!("loading scenario {}", config.display()))?;
    Ok(Arc::new(scenario))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            policy,
            episodes,
            out,
            seed,
        } => {
            let scenario = load(&config)?;
            let report = run_to_dir(policy.spec(seed), scenario, episodes, seed, &out)?;
            print!("{report}");
            println!("wrote {}", out.display());
        }
        Command::Serve { config, tcp } => {
            let scenario = load(&config)?;
            match tcp {
                None => server::serve_stdio(scenario)?,
                Some(addr) => {
                    let addr = if addr.contains(':') {
                        addr
                    } else {
                        format!("127.0.0.1:{addr}")
                    };
                    server::serve_tcp(scenario, addr.as_str(), |bound| {
                        eprintln!("listening on {bound}")
                    })?;
                }
            }
        }
        Command::Gen {
            out,
            videos,
            traces,
            gops,
            layers,
            users,
            viewports,
            seed,
        } => {
            let spec = AssetSpec {
                videos,
                traces,
                viewports_per_video: viewports,
                video: SyntheticVideo {
                    num_gops: gops,
                    num_layers: layers,
                    ..Default::default()
                },
                ..Default::default()
            };
            let settings = Settings {
                seed,
                ..Default::default()
            };
            let path = spec.generate(seed)?.write(&out, users, settings)?;
            println!("wrote {}", path.display());
        }
        Command::Validate { config } => {
            let sc = load(&config)?;
            println!(
                "ok: {} users, {} videos, {} traces, {} layers, observation width {}",
                sc.users,
                sc.videos.len(),
                sc.traces.len(),
                sc.num_layers(),
                4 * sc.settings.history + sc.num_layers() + 2 + sc.settings.future_window
            );
        }
    }
    Ok(())
}
