//! Frames shared by the benchmarks.

use casync::crlb::{sigma2_for_snr, CrlbInputs};
use casync::estimator::{genie_priors, SyncConfig};
use casync::harness::{ExperimentConfig, Setup, Trial};
use casync::{Constellation, PulseBank, Result, TurboCode};

/// One noisy frame of the default experiment plus genie-decoded priors.
pub struct Fixture {
    pub spec: Constellation,
    pub pulses: PulseBank,
    pub code: TurboCode,
    pub trial: Trial,
    pub sync: SyncConfig,
    pub inputs: CrlbInputs,
}

impl Fixture {
    pub fn new(modulation: usize, symbols: usize, snr_db: f64) -> Result<Self> {
        let cfg = ExperimentConfig {
            modulation,
            symbols,
            ..ExperimentConfig::default()
        };
        let setup = Setup::new(&cfg)?;
        let trial = setup.trial(snr_db, 0)?;
        let sync = setup.sync_config(snr_db);
        let spec = setup.spec;
        let (priors, _) = genie_priors(&trial.signal, trial.tau, &setup.code, &spec, &setup.pulses, &sync)?;
        let inputs = CrlbInputs::new(priors, &spec, 1.0, sigma2_for_snr(1.0, snr_db), &setup.pulses)?;
        Ok(Self {
            spec,
            pulses: setup.pulses,
            code: setup.code,
            trial,
            sync,
            inputs,
        })
    }

    pub fn qpsk() -> Self {
        Self::new(1, 400, 4.0).expect("default experiment is valid")
    }
}
