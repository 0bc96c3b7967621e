use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use tfdenoise::analysis::{extract_if_lines, relative_mse, Beta, DEFAULT_I_MIN_FRACTION};
use tfdenoise::experiments::{burst_surrogate, experiment1_signals, run_experiment3, StftParams};
use tfdenoise::filters::FilterReport;
use tfdenoise::io::{write_pgm, write_tfr_csv};
use tfdenoise::signal::{bandpass_downsample, load_wav};
use tfdenoise::tfr::{self, gaussian_window, normalize_to_image, stft};
use tfdenoise::{Error, Result, Signal, Tfr};

use crate::config::{RunConfig, Source, Synthetic};

struct Input {
    noisy: Signal,
    clean: Option<Signal>,
    burst: Option<(f64, f64)>,
}

fn load_input(cfg: &RunConfig) -> Result<Input> {
    match &cfg.source {
        Source::Synthetic(Synthetic::ToneChirp) => {
            let (clean, noisy) = experiment1_signals(&cfg.experiment1())?;
            Ok(Input {
                noisy,
                clean: Some(clean),
                burst: None,
            })
        }
        Source::Synthetic(Synthetic::Burst) => {
            let s = burst_surrogate(&cfg.surrogate())?;
            Ok(Input {
                noisy: s.noisy,
                clean: Some(s.clean),
                burst: Some(s.burst),
            })
        }
        Source::Wav(path) => {
            let mut signal = load_wav(path)?;
            if let Some(target) = cfg.fs {
                let (lo, hi) = cfg.band.unwrap_or((0.0, 0.45 * target));
                signal = bandpass_downsample(&signal, lo, hi, target)?;
            }
            Ok(Input {
                noisy: signal,
                clean: None,
                burst: None,
            })
        }
    }
}

fn raw_spectrogram(signal: &Signal, p: &StftParams) -> Result<Tfr> {
    let window = gaussian_window(p.window_sigma, p.window_len())?;
    Ok(tfr::spectrogram(&stft(signal, &window, p.hop, p.n_fft)?))
}

/// Normalized image; an identically zero spectrogram becomes a blank image.
fn image_of(raw: &Tfr, q: u32) -> Result<Tfr> {
    match normalize_to_image(raw, q) {
        Err(Error::DegenerateRange(_)) if raw.values.iter().all(|&v| v == 0.0) => {
            Tfr::image(raw.values.clone(), q)
        }
        other => other,
    }
}

fn prepare_out_dir(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out_dir)?;
    write_json(&cfg.out_dir.join("run_config.json"), cfg)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn spectrogram(cfg: &RunConfig) -> Result<()> {
    let input = load_input(cfg)?;
    let raw = raw_spectrogram(&input.noisy, &cfg.stft())?;
    let image = normalize_to_image(&raw, cfg.params.q)?;
    prepare_out_dir(cfg)?;
    write_pgm(&image, cfg.out_dir.join("spectrogram.pgm"))?;
    write_tfr_csv(&raw, cfg.out_dir.join("spectrogram.csv"))?;
    println!(
        "spectrogram {} x {} (frequency x time) written to {}",
        image.n_freq(),
        image.n_time(),
        cfg.out_dir.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct DenoiseReport {
    rows: usize,
    cols: usize,
    noisy_mse: Option<f64>,
    filters: Vec<FilterReport>,
    io_time_s: f64,
}

pub fn denoise(cfg: &RunConfig) -> Result<()> {
    let input = load_input(cfg)?;
    let stft_params = cfg.stft();
    let q = cfg.params.q;
    let noisy = image_of(&raw_spectrogram(&input.noisy, &stft_params)?, q)?;
    let clean = match &input.clean {
        Some(c) => Some(normalize_to_image(&raw_spectrogram(c, &stft_params)?, q)?),
        None => None,
    };
    prepare_out_dir(cfg)?;
    let mut io_time = 0.0;
    let mut timed_write = |image: &Tfr, name: &str| -> Result<()> {
        let start = Instant::now();
        write_pgm(image, cfg.out_dir.join(name))?;
        io_time += start.elapsed().as_secs_f64();
        Ok(())
    };
    timed_write(&noisy, "noisy.pgm")?;
    if let Some(c) = &clean {
        timed_write(c, "clean.pgm")?;
    }
    let noisy_mse = clean
        .as_ref()
        .map(|c| relative_mse(c, &noisy))
        .transpose()?;
    let mut reports = Vec::new();
    for &kind in &cfg.filters {
        let result = kind.run(&noisy, &cfg.params)?;
        let mse = clean
            .as_ref()
            .map(|c| relative_mse(c, &result.image))
            .transpose()?;
        timed_write(&result.image, &format!("{}.pgm", kind.name()))?;
        let report = result.report(kind.name(), mse);
        match report.mse {
            Some(m) => println!(
                "{:<12} mse {m:.4}  iterations {:>3}  time {:.3} s",
                report.filter, report.iterations, report.wall_time_s
            ),
            None => println!(
                "{:<12} iterations {:>3}  time {:.3} s",
                report.filter, report.iterations, report.wall_time_s
            ),
        }
        reports.push(report);
    }
    if let Some(m) = noisy_mse {
        println!("{:<12} mse {m:.4}", "noisy");
    }
    let report = DenoiseReport {
        rows: noisy.n_freq(),
        cols: noisy.n_time(),
        noisy_mse,
        filters: reports,
        io_time_s: io_time,
    };
    write_json(&cfg.out_dir.join("report.json"), &report)
}

pub fn iflines(
    cfg: &RunConfig,
    filter: Option<tfdenoise::FilterKind>,
    beta: Option<f64>,
    i_min: Option<f64>,
) -> Result<()> {
    let input = load_input(cfg)?;
    let mut image = image_of(&raw_spectrogram(&input.noisy, &cfg.stft())?, cfg.params.q)?;
    if let Some(kind) = filter {
        image = kind.run(&image, &cfg.params)?.image;
    }
    let beta = beta.map_or(Beta::Auto, Beta::Value);
    let i_min = i_min.unwrap_or(DEFAULT_I_MIN_FRACTION * cfg.params.q as f64);
    let track = extract_if_lines(&image, beta, i_min);
    prepare_out_dir(cfg)?;
    track.write_csv(cfg.out_dir.join("iflines.csv"))?;
    println!(
        "{} IF points (beta {:.3}, i_min {:.3})",
        track.points.len(),
        track.beta,
        track.i_min
    );
    Ok(())
}

#[derive(Serialize)]
struct Experiment3Report {
    alpha: f64,
    nf_iterations: usize,
    nf_wall_time_s: f64,
    argmax_t_original: f64,
    argmax_t_subtracted: f64,
    burst_window: Option<(f64, f64)>,
}

pub fn experiment3(cfg: &RunConfig, alpha: f64) -> Result<()> {
    let input = load_input(cfg)?;
    let out = run_experiment3(&input.noisy, &cfg.stft(), &cfg.params, alpha)?;
    prepare_out_dir(cfg)?;
    let dir = &cfg.out_dir;
    write_pgm(&out.s0, dir.join("s0.pgm"))?;
    write_pgm(&out.sn, dir.join("sn.pgm"))?;
    write_pgm(&out.subtracted, dir.join("subtracted.pgm"))?;
    out.profile_s0.write_csv(dir.join("energy_original.csv"))?;
    out.profile_subtracted
        .write_csv(dir.join("energy_subtracted.csv"))?;
    let at = |p: &tfdenoise::analysis::EnergyProfile| p.argmax().map_or(f64::NAN, |i| p.times[i]);
    let report = Experiment3Report {
        alpha,
        nf_iterations: out.nf.iterations,
        nf_wall_time_s: out.nf.wall_time,
        argmax_t_original: at(&out.profile_s0),
        argmax_t_subtracted: at(&out.profile_subtracted),
        burst_window: input.burst,
    };
    println!(
        "energy peak at {:.2} s before subtraction, {:.2} s after",
        report.argmax_t_original, report.argmax_t_subtracted
    );
    if let Some((a, b)) = input.burst {
        println!("burst window {a:.2}-{b:.2} s");
    }
    write_json(&dir.join("report.json"), &report)
}
