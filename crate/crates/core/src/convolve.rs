use realfft::RealFftPlanner;

use crate::error::Result;
use crate::real::Real;
use crate::signal::{check_rates, Signal};

/// Full linear convolution via zero-padded FFT. Output length is
/// `a.len() + b.len() - 1` (empty if either input is empty).
pub fn fft_convolve<T: Real>(a: &Signal<T>, b: &Signal<T>) -> Result<Signal<T>> {
    check_rates(a.sample_rate(), b.sample_rate())?;
    if a.is_empty() || b.is_empty() {
        return Ok(Signal::zeros(0, a.sample_rate()));
    }
    let out_len = a.len() + b.len() - 1;
    let n = out_len.next_power_of_two();

    let mut planner = RealFftPlanner::<T>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);

    let spectrum = |x: &[T]| {
        let mut buf = vec![T::zero(); n];
        buf[..x.len()].copy_from_slice(x);
        let mut out = forward.make_output_vec();
        forward
            .process(&mut buf, &mut out)
            .expect("buffer sizes match the plan");
        out
    };
    let mut fa = spectrum(a.samples());
    let fb = spectrum(b.samples());
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x = *x * *y;
    }
    // The product of two real spectra has real DC and Nyquist bins up to
    // rounding; the inverse transform requires them to be exactly real.
    fa[0].im = T::zero();
    fa[n / 2].im = T::zero();
    let mut time = inverse.make_output_vec();
    inverse
        .process(&mut fa, &mut time)
        .expect("buffer sizes match the plan");

    let scale = T::one() / T::from_usize_lossy(n);
    let samples = time[..out_len].iter().map(|&v| v * scale).collect();
    Ok(Signal::from_parts(samples, a.sample_rate()))
}
