use std::sync::Arc;

use edgevr_core::compute::Placement;
use edgevr_core::env::{load_scenario, Environment, JointAction, ScenarioConfig, Settings};
use edgevr_core::network::{ThroughputTrace, TraceImport};
use edgevr_core::synth::AssetSpec;
use edgevr_core::video::SyntheticVideo;
use edgevr_core::Error;

fn small() -> AssetSpec {
    AssetSpec {
        videos: 2,
        traces: 2,
        viewports_per_video: 1,
        video: SyntheticVideo {
            num_gops: 6,
            num_layers: 3,
            ..Default::default()
        },
        ..Default::default()
    }
}

#[test]
fn scenario_written_to_disk_replays_like_the_in_memory_one() {
    let dir = tempfile::tempdir().unwrap();
    let assets = small().generate(2).unwrap();
    let path = assets.write(dir.path(), 2, Settings::default()).unwrap();
    let from_disk = Arc::new(load_scenario(&path).unwrap());
    let in_memory = Arc::new(assets.into_scenario(2, Settings::default()).unwrap());

    let action = JointAction::uniform(2, 2, Placement::EcuDecodeHeadsetRender);
    let mut a = Environment::new(from_disk);
    let mut b = Environment::new(in_memory);
    assert_eq!(a.reset(9).unwrap(), b.reset(9).unwrap());
    loop {
        let (sa, sb) = (a.step(&action).unwrap(), b.step(&action).unwrap());
        assert_eq!(sa, sb);
        if sa.done {
            break;
        }
    }
}

#[test]
fn config_errors_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let path = small()
        .generate(0)
        .unwrap()
        .write(dir.path(), 1, Settings::default())
        .unwrap();

    let mut config = ScenarioConfig::load(&path).unwrap();
    config.traces[0] = "traces/missing.trace".into();
    let broken = dir.path().join("broken.json");
    config.save(&broken).unwrap();
    assert!(matches!(load_scenario(&broken), Err(Error::Io { .. })));

    let mut config = ScenarioConfig::load(&path).unwrap();
    config.users = 0;
    config.save(&broken).unwrap();
    assert!(matches!(load_scenario(&broken), Err(Error::Config(_))));

    std::fs::write(
        &broken,
        "{\"users\": 1, \"videos\": [], \"traces\": [], \"bogus\": 1}",
    )
    .unwrap();
    assert!(load_scenario(&broken).is_err());
}

#[test]
fn csv_import_matches_the_text_format() {
    let csv = "time_ms,throughput_mbps\n1000,100\n1500,250\n2000,50\n";
    let import = TraceImport {
        time_column: Some("time_ms".into()),
        time_scale: 1e-3,
        ..Default::default()
    };
    let trace = import.read(csv.as_bytes()).unwrap();
    let samples: Vec<_> = trace.samples().collect();
    assert_eq!(samples, vec![(0.0, 100e6), (0.5, 250e6), (1.0, 50e6)]);
    let reparsed = ThroughputTrace::parse(&trace.to_text()).unwrap();
    assert_eq!(reparsed, trace);
    // the final sample lasts as long as the interval before it, so one
    // 1.5 s cycle carries 50 + 125 + 25 Mbit
    assert!((trace.cumulative_bits(1.5) - 200e6).abs() < 1e-3);
    assert!((trace.cumulative_bits(3.0) - 400e6).abs() < 1e-3);

    let spaced = TraceImport::default()
        .read("throughput_mbps\n10\n20\n".as_bytes())
        .unwrap();
    assert_eq!(
        spaced.samples().collect::<Vec<_>>(),
        vec![(0.0, 10e6), (1.0, 20e6)]
    );
    assert!(TraceImport::default().read("rate\n1\n".as_bytes()).is_err());
}
