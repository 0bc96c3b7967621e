use tfdenoise::signal::{bandpass_downsample, gen_tone_chirp_mix, load_wav, write_wav, Signal};
use tfdenoise::Error;

fn tone(freq: f64, fs: f64, n: usize) -> Signal {
    Signal::new(
        (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * freq * i as f64 / fs).sin())
            .collect(),
        fs,
    )
    .unwrap()
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

/// DFT magnitude at `freq` by direct summation.
fn dft_amplitude(x: &[f64], fs: f64, freq: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (i, v) in x.iter().enumerate() {
        let phase = 2.0 * std::f64::consts::PI * freq * i as f64 / fs;
        re += v * phase.cos();
        im -= v * phase.sin();
    }
    2.0 * (re * re + im * im).sqrt() / x.len() as f64
}

#[test]
fn wav_round_trip_is_within_pcm_quantization() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mix.wav");
    let x = gen_tone_chirp_mix(1.0, 8000.0).unwrap();
    // unit L2 norm over 8000 samples is tiny per sample; scale up to use the PCM range
    let scaled = Signal::new(x.samples.iter().map(|v| v * 20.0).collect(), 8000.0).unwrap();
    write_wav(&scaled, &path).unwrap();
    let back = load_wav(&path).unwrap();
    assert_eq!(back.sample_rate, 8000.0);
    let err = scaled
        .samples
        .iter()
        .zip(&back.samples)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err <= 2.0 / 32768.0, "max error {err}");
}

#[test]
fn wav_of_constant_full_scale() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.wav");
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: 44100,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(&path, spec).unwrap();
    for _ in 0..100 {
        w.write_sample(32767i16).unwrap();
    }
    w.finalize().unwrap();
    let s = load_wav(&path).unwrap();
    assert!(s.samples.iter().all(|&v| v == 32767.0 / 32768.0));
}

#[test]
fn wav_errors_are_distinct() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        load_wav(dir.path().join("missing.wav")),
        Err(Error::FileNotFound(_))
    ));
    let junk = dir.path().join("junk.wav");
    std::fs::write(&junk, b"not a wave file at all").unwrap();
    assert!(matches!(load_wav(&junk), Err(Error::MalformedWav(_))));
    let float = dir.path().join("float.wav");
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: 8000,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut w = hound::WavWriter::create(&float, spec).unwrap();
    w.write_sample(0.5f32).unwrap();
    w.finalize().unwrap();
    assert!(matches!(
        load_wav(&float),
        Err(Error::UnsupportedEncoding(_))
    ));
}

#[test]
fn passband_tone_keeps_its_amplitude() {
    let fs = 44100.0;
    let x = tone(1000.0, fs, 44100);
    let y = bandpass_downsample(&x, 200.0, 3000.0, 8820.0).unwrap();
    assert_eq!(y.sample_rate, 8820.0);
    // skip the edges where the centered filter runs off the signal
    let inner = &y.samples[1000..y.len() - 1000];
    let before = dft_amplitude(&x.samples[5000..x.len() - 5000], fs, 1000.0);
    let after = dft_amplitude(inner, y.sample_rate, 1000.0);
    assert!(
        (after / before - 1.0).abs() <= 0.01,
        "gain {}",
        after / before
    );
}

#[test]
fn stopband_tone_is_attenuated() {
    let fs = 44100.0;
    let x = tone(5000.0, fs, 44100);
    let y = bandpass_downsample(&x, 200.0, 3000.0, 8820.0).unwrap();
    let inner = &y.samples[1000..y.len() - 1000];
    assert!(
        rms(inner) <= 0.05 * rms(&x.samples),
        "rms ratio {}",
        rms(inner) / rms(&x.samples)
    );
}

#[test]
fn pure_tone_terms_peak_at_their_bins() {
    let fs = 16000.0;
    let n = 8000;
    for freq in [500.0, 700.0] {
        let x = tone(freq, fs, n);
        let spectrum: Vec<f64> = (0..n / 2)
            .map(|k| dft_amplitude(&x.samples, fs, k as f64 * fs / n as f64))
            .collect();
        let peak = (0..n / 2)
            .max_by(|&a, &b| spectrum[a].total_cmp(&spectrum[b]))
            .unwrap();
        assert_eq!(peak as f64 * fs / n as f64, freq);
    }
}
