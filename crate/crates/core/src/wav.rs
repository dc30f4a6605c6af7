//! RIFF/WAVE input and output (32-bit float, 16/24-bit PCM; mono or stereo).

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::signal::{Signal, StereoSignal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WavFormat {
    #[default]
    Float32,
    Pcm16,
    Pcm24,
}

impl WavFormat {
    fn spec(self, channels: u16, sample_rate: u32) -> WavSpec {
        let (bits_per_sample, sample_format) = match self {
            WavFormat::Float32 => (32, SampleFormat::Float),
            WavFormat::Pcm16 => (16, SampleFormat::Int),
            WavFormat::Pcm24 => (24, SampleFormat::Int),
        };
        WavSpec {
            channels,
            sample_rate,
            bits_per_sample,
            sample_format,
        }
    }
}

/// Decoded file contents.
#[derive(Debug, Clone, PartialEq)]
pub enum Audio<T> {
    Mono(Signal<T>),
    Stereo(StereoSignal<T>),
}

impl<T: Real> Audio<T> {
    pub fn into_mono(self) -> Result<Signal<T>> {
        match self {
            Audio::Mono(s) => Ok(s),
            Audio::Stereo(_) => Err(Error::Format("expected a mono file, found stereo".into())),
        }
    }

    pub fn into_stereo(self) -> Result<StereoSignal<T>> {
        match self {
            Audio::Stereo(s) => Ok(s),
            Audio::Mono(_) => Err(Error::Format("expected a stereo file, found mono".into())),
        }
    }

    pub fn sample_rate(&self) -> u32 {
        match self {
            Audio::Mono(s) => s.sample_rate(),
            Audio::Stereo(s) => s.sample_rate(),
        }
    }
}

fn wav_err(path: &Path) -> impl FnOnce(hound::Error) -> Error + '_ {
    move |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    }
}

pub fn read_wav<T: Real>(path: impl AsRef<Path>) -> Result<Audio<T>> {
    let path = path.as_ref();
    let mut reader = WavReader::open(path).map_err(wav_err(path))?;
    let spec = reader.spec();
    let expected = reader.len() as usize;

    let data: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>(),
        (SampleFormat::Int, bits @ (16 | 24)) => {
            let scale = 1.0 / (1i64 << (bits - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()
        }
        (fmt, bits) => {
            return Err(Error::Format(format!(
                "{}: {bits}-bit {fmt:?} samples are not supported",
                path.display()
            )))
        }
    }
    .map_err(wav_err(path))?;
    if data.len() != expected {
        return Err(Error::Format(format!(
            "{}: truncated data chunk ({} of {expected} samples)",
            path.display(),
            data.len()
        )));
    }

    let to_t = |v: Vec<f64>| Signal::new(v.into_iter().map(T::lit).collect(), spec.sample_rate);
    match spec.channels {
        1 => Ok(Audio::Mono(to_t(data)?)),
        2 => {
            let left = data.iter().step_by(2).copied().collect();
            let right = data.iter().skip(1).step_by(2).copied().collect();
            Ok(Audio::Stereo(StereoSignal::new(to_t(left)?, to_t(right)?)?))
        }
        n => Err(Error::Format(format!(
            "{}: {n} channels are not supported",
            path.display()
        ))),
    }
}

pub fn write_wav<T: Real>(
    path: impl AsRef<Path>,
    signal: &Signal<T>,
    format: WavFormat,
) -> Result<()> {
    write_interleaved(path.as_ref(), &[signal], format)
}

pub fn write_stereo_wav<T: Real>(
    path: impl AsRef<Path>,
    signal: &StereoSignal<T>,
    format: WavFormat,
) -> Result<()> {
    write_interleaved(path.as_ref(), &[signal.left(), signal.right()], format)
}

fn write_interleaved<T: Real>(
    path: &Path,
    channels: &[&Signal<T>],
    format: WavFormat,
) -> Result<()> {
    let spec = format.spec(channels.len() as u16, channels[0].sample_rate());
    let mut writer = WavWriter::create(path, spec).map_err(wav_err(path))?;
    for i in 0..channels[0].len() {
        for ch in channels {
            let v = ch.samples()[i].as_f64();
            match format {
                WavFormat::Float32 => writer.write_sample(v as f32),
                WavFormat::Pcm16 => writer.write_sample(quantize(v, 16) as i16),
                WavFormat::Pcm24 => writer.write_sample(quantize(v, 24)),
            }
            .map_err(wav_err(path))?;
        }
    }
    writer.finalize().map_err(wav_err(path))
}

fn quantize(v: f64, bits: u32) -> i32 {
    let full = (1i64 << (bits - 1)) as f64;
    (v * full).round().clamp(-full, full - 1.0) as i32
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::seeded_noise;

    fn noise(n: usize, seed: u64) -> Signal<f64> {
        seeded_noise::<f64>(n, seed).unwrap().scaled(0.25)
    }

    #[test]
    fn float32_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        let x = noise(1000, 1).cast::<f32>();
        write_wav(&p, &x, WavFormat::Float32).unwrap();
        let y = read_wav::<f32>(&p).unwrap().into_mono().unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn pcm_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        for (fmt, bits) in [(WavFormat::Pcm16, 15), (WavFormat::Pcm24, 23)] {
            let p = dir.path().join(format!("{bits}.wav"));
            let x = noise(2000, 2);
            write_wav(&p, &x, fmt).unwrap();
            let y = read_wav::<f64>(&p).unwrap().into_mono().unwrap();
            let bound = 2f64.powi(-bits);
            for (a, b) in x.samples().iter().zip(y.samples()) {
                assert!((a - b).abs() <= bound);
            }
        }
    }

    #[test]
    fn stereo_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.wav");
        let st = StereoSignal::new(noise(300, 3), noise(300, 4)).unwrap();
        write_stereo_wav(&p, &st, WavFormat::Float32).unwrap();
        let back = read_wav::<f64>(&p).unwrap().into_stereo().unwrap();
        assert_eq!(back.len(), 300);
        for (a, b) in st.right().samples().iter().zip(back.right().samples()) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn truncated_file_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.wav");
        write_wav(&p, &noise(1000, 5), WavFormat::Pcm16).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 301]).unwrap();
        assert!(read_wav::<f64>(&p).is_err());
        std::fs::write(&p, &bytes[..30]).unwrap();
        assert!(read_wav::<f64>(&p).is_err());
    }

    #[test]
    fn unsupported_bit_depth() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u8.wav");
        let spec = WavSpec {
            channels: 1,
            sample_rate: 48_000,
            bits_per_sample: 8,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(&p, spec).unwrap();
        w.write_sample(3i8).unwrap();
        w.finalize().unwrap();
        assert!(matches!(read_wav::<f64>(&p), Err(Error::Format(_))));
    }
}
