use crate::error::{Error, Result};
use crate::real::Real;
use crate::signal::{Signal, SAMPLE_RATE};

use super::{distance, Position, RoomSpec, SPEED_OF_SOUND};

/// Shortest early part; later cutoffs come from third-order reflections.
pub const MIN_EARLY_CUTOFF_S: f64 = 0.05;

const SINC_HALF_TAPS: i64 = 4;

/// One specular path from an image source to the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageArrival {
    pub delay_s: f64,
    pub amplitude: f64,
    /// Total number of wall reflections along the path.
    pub order: u32,
    pub image: Position,
}

pub(crate) fn check_inside(room: &RoomSpec, p: &Position, what: &str) -> Result<()> {
    let inside = p
        .iter()
        .zip(&room.dimensions)
        .all(|(&x, &l)| x.is_finite() && x > 0.0 && x < l);
    if inside {
        Ok(())
    } else {
        Err(Error::Geometry(format!(
            "{what} {p:?} is not strictly inside a room of {:?} m",
            room.dimensions
        )))
    }
}

/// All image sources whose path arrives no later than `max_time_s`, sorted
/// by delay. Walls share one reflection coefficient.
pub fn image_sources(
    room: &RoomSpec,
    src: &Position,
    rcv: &Position,
    max_time_s: f64,
) -> Result<Vec<ImageArrival>> {
    check_inside(room, src, "source")?;
    check_inside(room, rcv, "receiver")?;
    let beta = room.reflection_coefficient();
    let reach = SPEED_OF_SOUND * max_time_s;

    // Per axis: image coordinate (1 - 2q) s + 2 n L after |2n - q| reflections.
    let axis_images = |axis: usize| -> Vec<(f64, u32)> {
        let l = room.dimensions[axis];
        let n_max = (reach / (2.0 * l)).ceil() as i64 + 1;
        let mut v = Vec::new();
        for n in -n_max..=n_max {
            for q in 0..=1i64 {
                let x = (1 - 2 * q) as f64 * src[axis] + 2.0 * n as f64 * l;
                if (x - rcv[axis]).abs() <= reach {
                    v.push((x, (2 * n - q).unsigned_abs() as u32));
                }
            }
        }
        v
    };
    let (xs, ys, zs) = (axis_images(0), axis_images(1), axis_images(2));

    let mut out = Vec::new();
    for &(x, ox) in &xs {
        for &(y, oy) in &ys {
            for &(z, oz) in &zs {
                let image = [x, y, z];
                let d = distance(&image, rcv);
                if d > reach {
                    continue;
                }
                let order = ox + oy + oz;
                out.push(ImageArrival {
                    delay_s: d / SPEED_OF_SOUND,
                    amplitude: beta.powi(order as i32) / (4.0 * std::f64::consts::PI * d),
                    order,
                    image,
                });
            }
        }
    }
    out.sort_by(|a, b| a.delay_s.total_cmp(&b.delay_s).then(a.order.cmp(&b.order)));
    Ok(out)
}

/// End of the image-source part: the later of 50 ms and the first
/// third-order arrival.
pub fn early_cutoff(room: &RoomSpec, src: &Position, rcv: &Position) -> Result<f64> {
    check_inside(room, src, "source")?;
    check_inside(room, rcv, "receiver")?;
    // Any third-order path is at most as long as the longest room walk
    // needed to reach it; search with a growing horizon.
    let mut horizon = 0.1;
    loop {
        let first = image_sources(room, src, rcv, horizon)?
            .into_iter()
            .find(|a| a.order == 3)
            .map(|a| a.delay_s);
        if let Some(t) = first {
            return Ok(t.max(MIN_EARLY_CUTOFF_S));
        }
        horizon *= 2.0;
    }
}

/// Renders arrivals with an 8-tap Hann-windowed sinc at the fractional delay.
pub fn render_arrivals<T: Real>(
    arrivals: &[ImageArrival],
    len: usize,
    sample_rate: u32,
) -> Signal<T> {
    let mut out = vec![0.0f64; len];
    let fs = f64::from(sample_rate);
    for a in arrivals {
        let tau = a.delay_s * fs;
        let base = tau.floor() as i64;
        for k in (base - SINC_HALF_TAPS + 1)..=(base + SINC_HALF_TAPS) {
            if k < 0 || k as usize >= len {
                continue;
            }
            let x = k as f64 - tau;
            let w = 0.5 * (1.0 + (std::f64::consts::PI * x / SINC_HALF_TAPS as f64).cos());
            out[k as usize] += a.amplitude * sinc(x) * w;
        }
    }
    Signal::from_parts(out.into_iter().map(T::lit).collect(), sample_rate)
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Shoebox image-source response, truncated at `t_cut` seconds.
pub fn image_source_early<T: Real>(
    room: &RoomSpec,
    src: &Position,
    rcv: &Position,
    t_cut: f64,
) -> Result<Signal<T>> {
    if !(t_cut >= MIN_EARLY_CUTOFF_S && t_cut.is_finite()) {
        return Err(Error::Config(format!(
            "t_cut {t_cut} s must be at least {MIN_EARLY_CUTOFF_S} s"
        )));
    }
    let arrivals = image_sources(room, src, rcv, t_cut)?;
    let len = (t_cut * f64::from(SAMPLE_RATE)).round() as usize;
    Ok(render_arrivals(&arrivals, len, SAMPLE_RATE))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room(dims: [f64; 3], t60: f64) -> RoomSpec {
        RoomSpec {
            dimensions: dims,
            target_t60: t60,
            band_decay_multipliers: vec![1.0; 10],
            seed: 0,
        }
    }

    #[test]
    fn direct_path_delay() {
        let r = room([10.0, 8.0, 3.0], 0.5);
        let rcv = [5.0, 4.0, 1.5];
        let src = [6.5, 4.0, 1.5];
        let h: Signal<f64> = image_source_early(&r, &src, &rcv, 0.05).unwrap();
        let direct = &h.samples()[..230];
        let peak = direct
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .unwrap()
            .0;
        assert_eq!(peak, 210);
        let e: f64 = direct.iter().map(|v| v * v).sum();
        let centroid: f64 = direct
            .iter()
            .enumerate()
            .map(|(i, v)| i as f64 * v * v)
            .sum::<f64>()
            / e;
        assert!((centroid - 1.5 / 343.0 * 48000.0).abs() < 0.5, "{centroid}");
    }

    #[test]
    fn direct_amplitude_follows_inverse_distance() {
        let r = room([20.0, 10.0, 4.0], 0.5);
        let rcv = [5.0, 5.0, 2.0];
        let a1 = image_sources(&r, &[7.0, 5.0, 2.0], &rcv, 0.1).unwrap()[0].amplitude;
        let a2 = image_sources(&r, &[9.0, 5.0, 2.0], &rcv, 0.1).unwrap()[0].amplitude;
        assert!((a1 / a2 - 2.0).abs() < 0.02);
    }

    #[test]
    fn first_order_images_match_mirror_geometry() {
        let (lx, ly, lz) = (7.0, 5.0, 3.0);
        let r = room([lx, ly, lz], 0.6);
        let s = [2.0, 1.5, 1.2];
        let m = [4.5, 3.0, 1.6];
        let mirrors = [
            s,
            [-s[0], s[1], s[2]],
            [2.0 * lx - s[0], s[1], s[2]],
            [s[0], -s[1], s[2]],
            [s[0], 2.0 * ly - s[1], s[2]],
            [s[0], s[1], -s[2]],
            [s[0], s[1], 2.0 * lz - s[2]],
        ];
        let mut expected: Vec<f64> = mirrors
            .iter()
            .map(|p| distance(p, &m) / 343.0 * 48000.0)
            .collect();
        expected.sort_by(f64::total_cmp);
        let got: Vec<f64> = image_sources(&r, &s, &m, 0.05)
            .unwrap()
            .into_iter()
            .filter(|a| a.order <= 1)
            .map(|a| a.delay_s * 48000.0)
            .collect();
        assert_eq!(got.len(), 7);
        for (g, e) in got.iter().zip(&expected) {
            assert!((g - e).abs() < 1.0);
        }
        // Higher orders never arrive before the direct sound.
        let all = image_sources(&r, &s, &m, 0.05).unwrap();
        assert_eq!(all[0].order, 0);
    }

    #[test]
    fn outside_positions_are_rejected() {
        let r = room([5.0, 5.0, 3.0], 0.5);
        assert!(matches!(
            image_source_early::<f64>(&r, &[6.0, 1.0, 1.0], &[2.0, 2.0, 1.5], 0.05),
            Err(Error::Geometry(_))
        ));
        assert!(image_source_early::<f64>(&r, &[1.0, 1.0, 1.0], &[2.0, 2.0, 0.0], 0.05).is_err());
        assert!(image_source_early::<f64>(&r, &[1.0, 1.0, 1.0], &[2.0, 2.0, 1.5], 0.01).is_err());
    }

    #[test]
    fn cutoff_is_at_least_fifty_ms() {
        let small = room([5.0, 5.0, 3.0], 0.5);
        assert_eq!(
            early_cutoff(&small, &[1.0, 1.0, 1.0], &[2.5, 2.5, 1.5]).unwrap(),
            0.05
        );
        let big = room([60.0, 50.0, 6.0], 1.0);
        let t = early_cutoff(&big, &[20.0, 20.0, 2.0], &[30.0, 25.0, 1.5]).unwrap();
        assert!(t > 0.05);
        let first3 = image_sources(&big, &[20.0, 20.0, 2.0], &[30.0, 25.0, 1.5], t)
            .unwrap()
            .iter()
            .filter(|a| a.order == 3)
            .map(|a| a.delay_s)
            .fold(f64::INFINITY, f64::min);
        assert!((first3 - t).abs() < 1e-12);
    }

    #[test]
    fn integer_delay_renders_a_single_sample() {
        let a = ImageArrival {
            delay_s: 100.0 / 48000.0,
            amplitude: 0.25,
            order: 0,
            image: [0.0; 3],
        };
        let h: Signal<f64> = render_arrivals(&[a], 200, 48000);
        assert!((h.samples()[100] - 0.25).abs() < 1e-12);
        assert!((h.energy() - 0.0625).abs() < 1e-12);
    }
}
