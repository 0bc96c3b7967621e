//! `tfdenoise`: spectrogram images, filters and the reproducible experiments
//! from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tfdenoise::FilterKind;

use config::{RunConfig, Source, Synthetic};

#[derive(Parser, Debug)]
#[command(
    name = "tfdenoise",
    version,
    about = "Denoise signals through their spectrogram images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the normalized spectrogram (PGM) and the raw spectrogram (CSV).
    Spectrogram(Common),
    /// Filter the spectrogram image with one filter, or all three with --all.
    Denoise {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_filter, conflicts_with = "all")]
        filter: Option<FilterKind>,
        #[arg(long)]
        all: bool,
    },
    /// Run the tone/chirp experiment: every selected filter, MSE and timings.
    Experiment1 {
        #[command(flatten)]
        common: Common,
        /// Restrict to these filters (repeatable); default all three.
        #[arg(long, value_parser = parse_filter)]
        filter: Vec<FilterKind>,
    },
    /// Extract instantaneous-frequency points to CSV.
    Iflines {
        #[command(flatten)]
        common: Common,
        /// Denoise with this filter before extracting.
        #[arg(long, value_parser = parse_filter)]
        filter: Option<FilterKind>,
        /// Truncation level in gray levels; default the image mean.
        #[arg(long, allow_negative_numbers = true)]
        beta: Option<f64>,
        /// Minimum mean intensity of a kept component; default Q/10.
        #[arg(long, allow_negative_numbers = true)]
        i_min: Option<f64>,
    },
    /// Neighborhood filter, subtraction of everything above alpha, energy profiles.
    Experiment3 {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        alpha: f64,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// JSON run configuration; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// 16-bit PCM WAV input.
    #[arg(long, conflicts_with = "synthetic")]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    synthetic: Option<Synthetic>,
    #[arg(long, allow_negative_numbers = true)]
    fs: Option<f64>,
    /// Pass band for WAV input before decimation: LO HI in Hz.
    #[arg(
        long,
        value_delimiter = ',',
        num_args = 2,
        allow_negative_numbers = true
    )]
    band: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    duration: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    snr: Option<f64>,
    /// Gaussian window standard deviation, samples.
    #[arg(long, allow_negative_numbers = true)]
    window_sigma: Option<f64>,
    #[arg(long)]
    window_len: Option<usize>,
    #[arg(long)]
    hop: Option<usize>,
    #[arg(long)]
    nfft: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    h: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    eps: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    eps_tilde: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    dtau: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    q: Option<u32>,
}

fn parse_filter(s: &str) -> Result<FilterKind, String> {
    s.parse().map_err(|e: tfdenoise::Error| e.to_string())
}

impl Common {
    fn resolve(&self) -> tfdenoise::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(path) = &self.input {
            cfg.source = Source::Wav(path.clone());
        }
        if let Some(kind) = self.synthetic {
            cfg.source = Source::Synthetic(kind);
        }
        set(&mut cfg.fs, self.fs);
        set(&mut cfg.duration_s, self.duration);
        if let Some(b) = &self.band {
            cfg.band = Some((b[0], b[1]));
        }
        if let Some(v) = self.snr {
            cfg.snr_db = v;
        }
        let mut stft = cfg.stft();
        let stft_default = stft.clone();
        if let Some(v) = self.window_sigma {
            stft.window_sigma = v;
        }
        set(&mut stft.window_len, self.window_len);
        if let Some(v) = self.hop {
            stft.hop = v;
        }
        if let Some(v) = self.nfft {
            stft.n_fft = v;
        }
        if cfg.stft.is_some() || stft != stft_default {
            cfg.stft = Some(stft);
        }
        let p = &mut cfg.params;
        for (slot, flag) in [
            (&mut p.h, self.h),
            (&mut p.rho, self.rho),
            (&mut p.eps, self.eps),
            (&mut p.eps_tilde, self.eps_tilde),
            (&mut p.dtau, self.dtau),
            (&mut p.tol, self.tol),
        ] {
            if let Some(v) = flag {
                *slot = v;
            }
        }
        if let Some(v) = self.max_iter {
            p.max_iter = v;
        }
        if let Some(v) = self.q {
            p.q = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = &self.out_dir {
            cfg.out_dir = v.clone();
        }
        cfg.params.validate()?;
        Ok(cfg)
    }
}

fn set<T: Copy>(slot: &mut Option<T>, flag: Option<T>) {
    if flag.is_some() {
        *slot = flag;
    }
}

fn run(cli: Cli) -> tfdenoise::Result<()> {
    match cli.command {
        Command::Spectrogram(common) => commands::spectrogram(&common.resolve()?),
        Command::Denoise {
            common,
            filter,
            all,
        } => {
            let mut cfg = common.resolve()?;
            if !all {
                cfg.filters = vec![filter.unwrap_or(FilterKind::Nf)];
            }
            commands::denoise(&cfg)
        }
        Command::Experiment1 { common, filter } => {
            let mut cfg = common.resolve()?;
            if !filter.is_empty() {
                cfg.filters = filter;
            }
            cfg.source = Source::Synthetic(Synthetic::ToneChirp);
            commands::denoise(&cfg)
        }
        Command::Iflines {
            common,
            filter,
            beta,
            i_min,
        } => commands::iflines(&common.resolve()?, filter, beta, i_min),
        Command::Experiment3 { common, alpha } => {
            let mut cfg = common.resolve()?;
            if common.config.is_none() && common.input.is_none() && common.synthetic.is_none() {
                cfg.source = Source::Synthetic(Synthetic::Burst);
            }
            commands::experiment3(&cfg, alpha)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &tfdenoise::Error) -> u8 {
    match err {
        tfdenoise::Error::SolverFailure { .. } => 3,
        tfdenoise::Error::Io(_) => 1,
        _ => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(
            exit_code(&tfdenoise::Error::SolverFailure {
                iterations: 5,
                residual: 1.0
            }),
            3
        );
        assert_eq!(
            exit_code(&tfdenoise::Error::FileNotFound(PathBuf::from("x"))),
            2
        );
        assert_eq!(
            exit_code(&tfdenoise::Error::InvalidArgument("bad".into())),
            2
        );
    }

    #[test]
    fn flags_override_defaults() {
        let cli = Cli::try_parse_from([
            "tfdenoise",
            "denoise",
            "--h",
            "4",
            "--hop",
            "8",
            "--filter",
            "tv",
            "--snr",
            "-3",
        ])
        .unwrap();
        let Command::Denoise {
            common,
            filter,
            all,
        } = cli.command
        else {
            panic!("wrong subcommand")
        };
        let cfg = common.resolve().unwrap();
        assert_eq!(cfg.params.h, 4.0);
        assert_eq!(cfg.snr_db, -3.0);
        assert_eq!(cfg.stft().hop, 8);
        assert_eq!(filter, Some(FilterKind::Tv));
        assert!(!all);
    }

    #[test]
    fn input_and_synthetic_conflict() {
        assert!(Cli::try_parse_from([
            "tfdenoise",
            "spectrogram",
            "--input",
            "a.wav",
            "--synthetic",
            "burst"
        ])
        .is_err());
    }
}
