use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tfdenoise::experiments::{surrogate_stft, Experiment1Config, StftParams, SurrogateConfig};
use tfdenoise::signal::DEFAULT_SEED;
use tfdenoise::{FilterKind, FilterParams, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Synthetic {
    /// Tones and chirps plus uniform noise, with the clean mixture as reference.
    ToneChirp,
    /// Line plus broadband burst plus gated narrowband interference.
    Burst,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    Synthetic(Synthetic),
    Wav(PathBuf),
}

/// Everything a command needs; mirrors the JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub source: Source,
    /// Sample rate of synthetic sources; for WAV input, the rate to
    /// band-limit and decimate to.
    pub fs: Option<f64>,
    pub duration_s: Option<f64>,
    pub snr_db: f64,
    /// Pass band applied before decimating WAV input, Hz.
    pub band: Option<(f64, f64)>,
    /// `None` picks the source's default.
    pub stft: Option<StftParams>,
    pub params: FilterParams,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub filters: Vec<FilterKind>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            source: Source::Synthetic(Synthetic::ToneChirp),
            fs: None,
            duration_s: None,
            snr_db: 0.0,
            band: None,
            stft: None,
            params: FilterParams::default(),
            out_dir: PathBuf::from("out"),
            seed: DEFAULT_SEED,
            filters: FilterKind::ALL.to_vec(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => tfdenoise::Error::FileNotFound(path.to_path_buf()),
            _ => e.into(),
        })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn stft(&self) -> StftParams {
        self.stft.clone().unwrap_or_else(|| match self.source {
            Source::Synthetic(Synthetic::Burst) => surrogate_stft(),
            _ => StftParams::default(),
        })
    }

    pub fn experiment1(&self) -> Experiment1Config {
        let base = Experiment1Config::default();
        Experiment1Config {
            duration_s: self.duration_s.unwrap_or(base.duration_s),
            fs: self.fs.unwrap_or(base.fs),
            seed: self.seed,
            snr_db: self.snr_db,
            stft: self.stft(),
            params: self.params.clone(),
        }
    }

    pub fn surrogate(&self) -> SurrogateConfig {
        let base = SurrogateConfig::default();
        SurrogateConfig {
            fs: self.fs.unwrap_or(base.fs),
            duration_s: self.duration_s.unwrap_or(base.duration_s),
            seed: self.seed,
            ..base
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_keeps_every_field() {
        let cfg = RunConfig {
            source: Source::Wav(PathBuf::from("a.wav")),
            fs: Some(8820.0),
            band: Some((200.0, 3000.0)),
            stft: Some(StftParams {
                window_sigma: 12.0,
                window_len: Some(97),
                hop: 8,
                n_fft: 256,
            }),
            filters: vec![FilterKind::Tv],
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn missing_fields_take_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"source": {"synthetic": "burst"}}"#).unwrap();
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.stft(), surrogate_stft());
        assert_eq!(RunConfig::default().stft(), StftParams::default());
    }

    #[test]
    fn synthetic_settings_follow_the_config() {
        let cfg = RunConfig {
            fs: Some(16000.0),
            seed: 3,
            snr_db: 5.0,
            ..RunConfig::default()
        };
        let e1 = cfg.experiment1();
        assert_eq!((e1.fs, e1.seed, e1.snr_db), (16000.0, 3, 5.0));
        assert_eq!(cfg.surrogate().fs, 16000.0);
    }
}
