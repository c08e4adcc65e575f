//! Builds design and sweep configurations in code, prints them as TOML and
//! runs both commands into a temporary directory.
//!
//! cargo run --release --example config_files

use mimo_sic::cli::config::{to_toml, ChannelSpec, DesignConfig};
use mimo_sic::cli::{cmd_design, cmd_simulate};
use mimo_sic::majorization::Objective;
use mimo_sic::montecarlo::{DesignSpec, SweepConfig};
use mimo_sic::transceiver::Scheme;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join("mimo-sic-config-example");
    std::fs::create_dir_all(&dir)?;

    let design_cfg = DesignConfig {
        streams: 2,
        total_power: 4.0,
        scheme: Scheme::Thp,
        constellation: Some(16),
        objective: Objective::max_mse(),
        channel: ChannelSpec::Rayleigh { tx_antennas: 2, rx_antennas: 2, noise_power: 0.1, seed: 3 },
    };
    let text = to_toml(&design_cfg);
    println!("--- design.toml\n{text}");
    std::fs::write(dir.join("design.toml"), &text)?;
    let report = cmd_design(&dir.join("design.toml"), &dir.join("design"))?;
    print!("{}", report.to_text());

    let sweep = SweepConfig {
        tx_antennas: 2,
        rx_antennas: 2,
        streams: 2,
        constellation: 4,
        snr_db: vec![6.0, 12.0],
        channels_per_point: 20,
        symbols_per_channel: 1_000,
        designs: vec![DesignSpec::optimal(Scheme::Dfe, Objective::sum_mse()), DesignSpec::LinearMmse],
        master_seed: 1,
        total_power: 1.0,
    };
    let text = to_toml(&sweep);
    println!("\n--- sweep.toml\n{text}");
    std::fs::write(dir.join("sweep.toml"), &text)?;
    let outcome = cmd_simulate(&dir.join("sweep.toml"), &dir.join("sweep"), None)?;
    print!("{}", std::fs::read_to_string(dir.join("sweep").join("ber.csv"))?);
    println!("manifest lists {} file(s)", outcome.manifest.emitted_files.len());
    Ok(())
}
