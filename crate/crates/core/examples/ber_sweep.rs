//! BER against SNR for equal-MSE DFE and THP and the two linear baselines on
//! 4x4 Rayleigh channels with 16-QAM. Prints CSV to stdout.
//!
//! cargo run --release --example ber_sweep [channels] [vectors-per-channel]

use mimo_sic::cli::ber_csv;
use mimo_sic::majorization::Objective;
use mimo_sic::montecarlo::{run_sweep, DesignSpec, SweepConfig};
use mimo_sic::transceiver::Scheme;

fn main() -> mimo_sic::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().expect("count"));
    let channels = args.next().unwrap_or(100);
    let vectors = args.next().unwrap_or(2_000);
    let cfg = SweepConfig {
        tx_antennas: 4,
        rx_antennas: 4,
        streams: 4,
        constellation: 16,
        snr_db: (0..=7).map(|i| 4.0 + 3.0 * i as f64).collect(),
        channels_per_point: channels,
        symbols_per_channel: vectors,
        designs: vec![
            DesignSpec::optimal(Scheme::Dfe, Objective::sum_mse()),
            DesignSpec::genie_dfe(Objective::sum_mse()),
            DesignSpec::optimal(Scheme::Thp, Objective::sum_mse()),
            DesignSpec::LinearMmse,
            DesignSpec::LinearMaxinfo,
        ],
        master_seed: 2024,
        total_power: 1.0,
    };
    print!("{}", ber_csv(&run_sweep(&cfg)?, cfg.streams));
    Ok(())
}
