//! Seeding and entry distributions.
//!
//! All randomness derives from a counter-based generator (ChaCha8) addressed
//! by `(master seed, stream)`. Streams are partitioned by purpose so that
//! profile construction, per-trial channel draws and per-trial sample noise
//! never overlap, and so that trial `t` always sees the same stream no matter
//! how trials are scheduled across workers.

use crate::linalg::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

const DOMAIN_SHIFT: u64 = 48;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamDomain {
    /// Correlation-profile construction (angle intervals, distances).
    Profile,
    /// Channel matrix of one Monte Carlo trial.
    Trial,
    /// Symbol/noise samples of one Monte Carlo SINR estimate.
    Samples,
}

impl StreamDomain {
    fn tag(self) -> u64 {
        match self {
            StreamDomain::Profile => 0,
            StreamDomain::Trial => 1,
            StreamDomain::Samples => 2,
        }
    }
}

/// Fully reproducible RNG address: master seed plus stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master: u64,
    pub stream: u64,
}

impl SeedSpec {
    pub fn new(master: u64, domain: StreamDomain, index: u64) -> Self {
        debug_assert!(index < 1 << DOMAIN_SHIFT);
        SeedSpec {
            master,
            stream: (domain.tag() << DOMAIN_SHIFT) | index,
        }
    }

    pub fn profile(master: u64) -> Self {
        Self::new(master, StreamDomain::Profile, 0)
    }

    pub fn trial(master: u64, trial: usize) -> Self {
        Self::new(master, StreamDomain::Trial, trial as u64)
    }

    pub fn samples(master: u64, trial: usize) -> Self {
        Self::new(master, StreamDomain::Samples, trial as u64)
    }

    pub fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

/// Distribution of the i.i.d. channel entries, zero mean and unit variance
/// (`E|w|^2 = 1`) with finite eighth moment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntryLaw {
    /// Standard circularly-symmetric complex Gaussian.
    #[default]
    Gaussian,
    /// Real and imaginary parts uniform on `[-sqrt(3/2), sqrt(3/2))`.
    Uniform,
}

impl EntryLaw {
    pub fn sample<R: Rng>(self, rng: &mut R) -> C64 {
        match self {
            EntryLaw::Gaussian => standard_complex(rng),
            EntryLaw::Uniform => {
                const HALF_WIDTH: f64 = 1.224744871391589; // sqrt(3/2)
                let re: f64 = rng.random_range(-HALF_WIDTH..HALF_WIDTH);
                let im: f64 = rng.random_range(-HALF_WIDTH..HALF_WIDTH);
                C64::new(re, im)
            }
        }
    }
}

/// One draw of a standard complex Gaussian, `E|w|^2 = 1`.
#[inline]
pub fn standard_complex<R: Rng>(rng: &mut R) -> C64 {
    const SCALE: f64 = std::f64::consts::FRAC_1_SQRT_2;
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * SCALE, im * SCALE)
}
