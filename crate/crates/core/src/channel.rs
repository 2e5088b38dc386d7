//! Scalar link abstraction and seeded channel-gain generation.

use rand::distr::Open01;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Identifier of the random stream construction, recorded in run manifests.
/// Bump it if [`make_stream`] or [`sample_gain`] ever change their output.
pub const RNG_ALGORITHM: &str = "chacha8-stream/v1";

/// One user's physical link: `|h|²` and noise variance `σ²` (watts).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLink")]
pub struct LinkState {
    gain_sq: f64,
    noise_var: f64,
}

#[derive(Deserialize)]
struct RawLink {
    gain_sq: f64,
    noise_var: f64,
}

impl TryFrom<RawLink> for LinkState {
    type Error = Error;

    fn try_from(raw: RawLink) -> Result<Self> {
        LinkState::new(raw.gain_sq, raw.noise_var)
    }
}

impl LinkState {
    pub fn new(gain_sq: f64, noise_var: f64) -> Result<Self> {
        if !(gain_sq.is_finite() && gain_sq >= 0.0) {
            return Err(Error::invalid("gain_sq", "must be finite and >= 0", gain_sq));
        }
        if !(noise_var.is_finite() && noise_var > 0.0) {
            return Err(Error::invalid("noise_var", "must be finite and > 0", noise_var));
        }
        Ok(Self { gain_sq, noise_var })
    }

    /// Unit gain, unit noise: SNR equals transmit power.
    pub fn unit() -> Self {
        Self {
            gain_sq: 1.0,
            noise_var: 1.0,
        }
    }

    pub fn gain_sq(&self) -> f64 {
        self.gain_sq
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn with_gain(&self, gain_sq: f64) -> Result<Self> {
        Self::new(gain_sq, self.noise_var)
    }

    /// Linear SNR `p·|h|²/σ²` at transmit power `power`.
    #[inline]
    pub fn snr(&self, power: f64) -> f64 {
        power * self.gain_sq / self.noise_var
    }

    /// `|h|²/σ²`, the SNR per watt.
    #[inline]
    pub fn gain_to_noise(&self) -> f64 {
        self.gain_sq / self.noise_var
    }
}

/// Fading model for per-realization `|h|²` draws.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelModel {
    /// `|h|` Rayleigh with `E[|h|²] = 1`, i.e. `|h|² ~ Exp(1)`.
    RayleighUnitPower,
    /// Fixed gain, e.g. an AWGN link.
    Static { static_gain_sq: f64 },
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ChannelModel::RayleighUnitPower => Ok(()),
            ChannelModel::Static { static_gain_sq } => {
                if static_gain_sq.is_finite() && static_gain_sq >= 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(
                        "static_gain_sq",
                        "must be finite and >= 0",
                        static_gain_sq,
                    ))
                }
            }
        }
    }

    /// Gain at cumulative probability `q` of the model's distribution.
    pub fn gain_quantile(&self, q: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::invalid("quantile", "must lie in (0, 1)", q));
        }
        Ok(match *self {
            ChannelModel::RayleighUnitPower => -(-q).ln_1p(),
            ChannelModel::Static { static_gain_sq } => static_gain_sq,
        })
    }
}

/// A reproducible random stream. Not shared across threads: give each task
/// its own `stream_id`.
#[derive(Debug, Clone)]
pub struct ChannelStream {
    rng: ChaCha8Rng,
}

impl ChannelStream {
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

/// Stream `stream_id` of the generator keyed by `seed`. ChaCha's 64-bit
/// stream selector keeps streams under one seed disjoint.
pub fn make_stream(seed: u64, stream_id: u64) -> ChannelStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    ChannelStream { rng }
}

/// Draws one `|h|²`. Rayleigh draws use inversion of an open-interval
/// uniform, so they are strictly positive.
pub fn sample_gain(model: &ChannelModel, stream: &mut ChannelStream) -> f64 {
    match *model {
        ChannelModel::RayleighUnitPower => {
            let u: f64 = stream.rng.sample(Open01);
            -u.ln()
        }
        ChannelModel::Static { static_gain_sq } => static_gain_sq,
    }
}
