use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filterbank::OctaveFilterBank;
use crate::loss::{MultiResConfig, MultiResLoss};
use crate::metrics::{linear_slope, schroeder_edc};
use crate::real::Real;
use crate::signal::{Signal, SAMPLE_RATE};

use super::{fns_bands, FnsDecoder, FnsParams, EARLY_LEN, MAX_T60, MIN_T60, N_BANDS, RIR_LEN};

const MIN_GAIN: f64 = 1e-8;
/// Smallest line-search half-width, in log units.
const MIN_WIDTH: f64 = 0.02;
const MAX_GAIN: f64 = 10.0;
/// 1 / golden ratio.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Maximum number of loss evaluations, at least 100.
    pub budget: usize,
    pub noise_seed: u64,
    pub init_gain: f64,
    pub init_t60: f64,
    /// Loss evaluations per line search.
    pub line_search_evals: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            budget: 2000,
            noise_seed: 0,
            init_gain: 0.02,
            init_t60: 0.5,
            line_search_evals: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: FnsParams,
    /// Initial loss, then the loss after every accepted step.
    pub loss_trace: Vec<f64>,
    pub evaluations: usize,
    pub budget_exhausted: bool,
}

impl FitResult {
    pub fn final_loss(&self) -> f64 {
        *self
            .loss_trace
            .last()
            .expect("trace starts with the initial loss")
    }
}

/// Search coordinates per band: the log gain, and the log decay time with
/// the band's log envelope turning about a pivot time. Holding the level at
/// the pivot fixed lines the decay axis up with the loss valley, which runs
/// diagonally in (gain, T60) because the log-magnitude term behaves like an
/// L1 fit of the log envelope. Each band starts with a pivot a quarter T60
/// past the early part and re-estimates it from accepted pattern moves.
#[derive(Clone, Copy)]
struct Coord {
    band: usize,
    is_decay: bool,
}

/// `ln 10^3`: the log-amplitude drop over one T60.
const KAPPA: f64 = 6.907_755_278_982_137;
const MAX_PIVOT_S: f64 = 1.0;

fn initial_pivot(t60: f64) -> f64 {
    (EARLY_LEN as f64 / SAMPLE_RATE as f64 + 0.25 * t60).min(MAX_PIVOT_S)
}

#[derive(Clone, Copy)]
enum Move {
    Axis(Coord),
    Pattern { band: usize, dg: f64, dt: f64 },
}

impl Move {
    fn band(self) -> usize {
        match self {
            Move::Axis(c) => c.band,
            Move::Pattern { band, .. } => band,
        }
    }
}

#[derive(Clone, Copy)]
struct State {
    ln_gain: [f64; N_BANDS],
    ln_t60: [f64; N_BANDS],
    pivot: [f64; N_BANDS],
}

impl State {
    fn set(&mut self, b: usize, gain: f64, t60: f64) {
        self.ln_gain[b] = gain.ln();
        self.ln_t60[b] = t60.ln();
        self.pivot[b] = initial_pivot(t60);
    }

    fn band(&self, b: usize) -> (f64, f64) {
        (self.ln_gain[b].exp(), self.ln_t60[b].exp())
    }

    fn get(&self, mv: Move) -> f64 {
        match mv {
            Move::Axis(c) if c.is_decay => self.ln_t60[c.band],
            Move::Axis(c) => self.ln_gain[c.band],
            Move::Pattern { .. } => 0.0,
        }
    }

    /// Applies a move. Decay moves also adjust the gain so the envelope
    /// turns about the pivot; pattern moves step along `(dg, dt)`.
    fn moved(&self, mv: Move, x: f64) -> State {
        let mut s = *self;
        let (lo_g, hi_g) = (MIN_GAIN.ln(), MAX_GAIN.ln());
        let (lo_t, hi_t) = ((MIN_T60 * 1.0001).ln(), MAX_T60.ln());
        match mv {
            Move::Axis(Coord {
                band,
                is_decay: true,
            }) => {
                let t0 = self.ln_t60[band].exp();
                s.ln_t60[band] = x;
                let g = self.ln_gain[band] + KAPPA * self.pivot[band] * (1.0 / x.exp() - 1.0 / t0);
                s.ln_gain[band] = g.clamp(lo_g, hi_g);
            }
            Move::Axis(Coord {
                band,
                is_decay: false,
            }) => s.ln_gain[band] = x,
            Move::Pattern { band, dg, dt } => {
                s.ln_gain[band] = (self.ln_gain[band] + x * dg).clamp(lo_g, hi_g);
                s.ln_t60[band] = (self.ln_t60[band] + x * dt).clamp(lo_t, hi_t);
                // Level at t_p is fixed along the move when
                // d ln g = KAPPA t_p d(1/T60).
                let dr = (-s.ln_t60[band]).exp() - (-self.ln_t60[band]).exp();
                let da = s.ln_gain[band] - self.ln_gain[band];
                if dr.abs() > 1e-9 {
                    let p = da / (KAPPA * dr);
                    if (0.0..=MAX_PIVOT_S).contains(&p) {
                        s.pivot[band] = p;
                    }
                }
            }
        }
        s
    }

    fn bounds(&self, c: Coord) -> (f64, f64) {
        if c.is_decay {
            ((MIN_T60 * 1.0001).ln(), MAX_T60.ln())
        } else {
            (MIN_GAIN.ln(), MAX_GAIN.ln())
        }
    }
}

struct Objective<'a, T: Real> {
    decoder: &'a FnsDecoder<T>,
    loss: MultiResLoss<T>,
    early: Vec<f64>,
    buf: Vec<T>,
    evaluations: usize,
}

impl<T: Real> Objective<'_, T> {
    fn eval(&mut self, contributions: &[Vec<T>]) -> Result<f64> {
        self.evaluations += 1;
        self.decoder
            .assemble(&self.early, contributions, &mut self.buf);
        Ok(self.loss.evaluate_samples(&self.buf)?.as_f64())
    }
}

/// Fits band gains and decay times to `target` by coordinate descent on the
/// multi-resolution STFT loss. The early part is copied from the target.
pub fn fit_to_rir<T: Real>(
    target: &Signal<T>,
    mcfg: &MultiResConfig,
    cfg: &FitConfig,
) -> Result<FitResult> {
    target.require_rate(SAMPLE_RATE)?;
    if target.len() < RIR_LEN {
        return Err(Error::TooShort {
            needed: RIR_LEN,
            got: target.len(),
        });
    }
    if cfg.budget < 100 {
        return Err(Error::Config(format!(
            "fit budget must be at least 100, got {}",
            cfg.budget
        )));
    }
    if cfg.line_search_evals < 2 {
        return Err(Error::Config(
            "line search needs at least 2 evaluations".into(),
        ));
    }
    if !(cfg.init_gain > 0.0 && cfg.init_t60 > MIN_T60 && cfg.init_t60 <= MAX_T60) {
        return Err(Error::Config(
            "initial gain must be positive and initial T60 in range".into(),
        ));
    }
    let reference = target.fit_to_len(RIR_LEN);
    let decoder = FnsDecoder::<T>::new(cfg.noise_seed)?;
    let mut obj = Objective {
        decoder: &decoder,
        loss: MultiResLoss::new(&reference, mcfg)?,
        early: reference.samples()[..EARLY_LEN]
            .iter()
            .map(|v| v.as_f64())
            .collect(),
        buf: vec![T::zero(); RIR_LEN],
        evaluations: 0,
    };

    let mut state = State {
        ln_gain: [cfg.init_gain.ln(); N_BANDS],
        ln_t60: [cfg.init_t60.ln(); N_BANDS],
        pivot: [initial_pivot(cfg.init_t60); N_BANDS],
    };
    let mut contributions = vec![vec![T::zero(); RIR_LEN]; N_BANDS];
    for (b, c) in contributions.iter_mut().enumerate() {
        let (g, t) = state.band(b);
        decoder.band_contribution(b, g, t, c);
    }
    let mut best = obj.eval(&contributions)?;
    let mut trace = vec![best];

    // Data-driven starting points, each tried for all bands at once and
    // then band by band; only moves that lower the loss are kept.
    let projected = projection_proposal(&decoder, &reference);
    let proposals = [
        refine_by_projection(&decoder, &reference, &projected),
        projected,
        analysis_proposal(&decoder, &reference)?,
    ];
    for proposal in &proposals {
        // Values as the state stores them, so params decode to what was scored.
        let proposal: Vec<Option<(f64, f64)>> = proposal
            .iter()
            .map(|p| p.map(|(g, t)| (g.ln().exp(), t.ln().exp())))
            .collect();
        let mut proposed = contributions.clone();
        let mut proposed_state = state;
        for (b, p) in proposal.iter().enumerate() {
            if let Some((g, t)) = *p {
                decoder.band_contribution(b, g, t, &mut proposed[b]);
                proposed_state.set(b, g, t);
            }
        }
        let f = obj.eval(&proposed)?;
        if f < best {
            best = f;
            trace.push(best);
            contributions = proposed;
            state = proposed_state;
            continue;
        }
        for (b, p) in proposal.iter().enumerate() {
            let Some((g, t)) = *p else { continue };
            let saved = std::mem::replace(&mut contributions[b], vec![T::zero(); RIR_LEN]);
            decoder.band_contribution(b, g, t, &mut contributions[b]);
            let f = obj.eval(&contributions)?;
            if f < best {
                best = f;
                trace.push(best);
                state.set(b, g, t);
            } else {
                contributions[b] = saved;
            }
        }
    }

    let coords: Vec<Coord> = (0..N_BANDS)
        .flat_map(|band| {
            [
                Coord {
                    band,
                    is_decay: false,
                },
                Coord {
                    band,
                    is_decay: true,
                },
            ]
        })
        .collect();
    let init_width = |c: Coord| if c.is_decay { 3f64.ln() } else { 10f64.ln() };
    let mut width: Vec<f64> = coords.iter().map(|&c| init_width(c)).collect();
    let mut scratch = vec![T::zero(); RIR_LEN];
    let n = cfg.line_search_evals;
    let mut budget_exhausted = false;

    // Golden-section search over one move; commits the best point if it
    // lowers the loss and returns it.
    let mut line_search =
        |mv: Move, a: f64, b: f64, state: &mut State, best: &mut f64, obj: &mut Objective<T>| {
            let band = mv.band();
            let base = *state;
            let mut f = |x: f64, obj: &mut Objective<T>| -> Result<f64> {
                let (g, t) = base.moved(mv, x).band(band);
                decoder.band_contribution(band, g, t, &mut scratch);
                std::mem::swap(&mut scratch, &mut contributions[band]);
                let r = obj.eval(&contributions);
                std::mem::swap(&mut scratch, &mut contributions[band]);
                r
            };
            let x0 = base.get(mv);
            let (x_best, f_best) = golden_section(a, b, n, (x0, *best), |x| f(x, obj))?;
            if f_best < *best {
                *state = base.moved(mv, x_best);
                let (g, t) = state.band(band);
                decoder.band_contribution(band, g, t, &mut contributions[band]);
                *best = f_best;
                trace.push(f_best);
                Ok::<_, Error>(Some(x_best - x0))
            } else {
                Ok(None)
            }
        };

    'sweeps: loop {
        let before = best;
        let start = state;
        for (ci, &c) in coords.iter().enumerate() {
            if obj.evaluations + n > cfg.budget {
                budget_exhausted = true;
                break 'sweeps;
            }
            let x0 = state.get(Move::Axis(c));
            let (lo, hi) = state.bounds(c);
            let (a, b) = ((x0 - width[ci]).max(lo), (x0 + width[ci]).min(hi));
            match line_search(Move::Axis(c), a, b, &mut state, &mut best, &mut obj)? {
                Some(step) => {
                    let step = step.abs();
                    width[ci] = if step > 0.9 * width[ci] {
                        (2.0 * width[ci]).min(2.0 * init_width(c))
                    } else {
                        (2.0 * step).clamp(MIN_WIDTH, init_width(c))
                    };
                }
                None => width[ci] = (0.5 * width[ci]).max(MIN_WIDTH),
            }
        }
        // Pattern moves along each band's net displacement follow valleys
        // that run diagonally to the axes.
        for band in 0..N_BANDS {
            let dg = state.ln_gain[band] - start.ln_gain[band];
            let dt = state.ln_t60[band] - start.ln_t60[band];
            if dg.abs() + dt.abs() < 1e-6 {
                continue;
            }
            if obj.evaluations + n > cfg.budget {
                budget_exhausted = true;
                break 'sweeps;
            }
            line_search(
                Move::Pattern { band, dg, dt },
                -0.5,
                2.0,
                &mut state,
                &mut best,
                &mut obj,
            )?;
        }
        if best >= before {
            break;
        }
    }

    let mut params = FnsParams {
        early: obj.early.clone(),
        band_gains: vec![0.0; N_BANDS],
        band_t60: vec![0.0; N_BANDS],
        noise_seed: cfg.noise_seed,
    };
    for b in 0..N_BANDS {
        let (g, t) = state.band(b);
        params.band_gains[b] = g;
        params.band_t60[b] = t;
    }
    Ok(FitResult {
        params,
        loss_trace: trace,
        evaluations: obj.evaluations,
        budget_exhausted,
    })
}

/// Per-band `(gain, T60)` from projecting the late part onto the decoder's
/// own band noises. Over short windows the envelopes are nearly constant,
/// so a least-squares fit per window gives each band's local amplitude and
/// a line through the log amplitudes gives its decay.
fn projection_proposal<T: Real>(
    decoder: &FnsDecoder<T>,
    reference: &Signal<T>,
) -> Vec<Option<(f64, f64)>> {
    const WINDOW: usize = 480;
    const FLOOR: f64 = 1e-2;
    let r: Vec<f64> = reference.samples().iter().map(|v| v.as_f64()).collect();
    let noise: Vec<Vec<f64>> = decoder
        .bands
        .iter()
        .map(|b| b.iter().map(|v| v.as_f64()).collect())
        .collect();
    let mut amps: Vec<Vec<(f64, f64)>> = vec![Vec::new(); N_BANDS];
    let mut start = EARLY_LEN;
    while start + WINDOW <= r.len().min(RIR_LEN) {
        let span = start..start + WINDOW;
        let mut gram = [[0.0; N_BANDS]; N_BANDS];
        let mut rhs = [0.0; N_BANDS];
        for j in 0..N_BANDS {
            for k in j..N_BANDS {
                let v: f64 = noise[j][span.clone()]
                    .iter()
                    .zip(&noise[k][span.clone()])
                    .map(|(a, b)| a * b)
                    .sum();
                gram[j][k] = v;
                gram[k][j] = v;
            }
            rhs[j] = noise[j][span.clone()]
                .iter()
                .zip(&r[span.clone()])
                .map(|(a, b)| a * b)
                .sum();
        }
        if let Some(a) = solve(gram, rhs) {
            let t = (start as f64 + WINDOW as f64 / 2.0) / f64::from(SAMPLE_RATE);
            for (b, &ab) in a.iter().enumerate() {
                amps[b].push((t, ab));
            }
        }
        start += WINDOW;
    }
    amps.iter()
        .map(|pts| {
            let peak = pts.first()?.1;
            if peak <= 0.0 {
                return None;
            }
            let line: Vec<(f64, f64)> = pts
                .iter()
                .take_while(|&&(_, a)| a > peak * FLOOR)
                .map(|&(t, a)| (t, a.ln()))
                .collect();
            if line.len() < 3 {
                return None;
            }
            let slope = linear_slope(&line);
            if slope >= 0.0 {
                return None;
            }
            let n = line.len() as f64;
            let intercept = line.iter().map(|p| p.1).sum::<f64>() / n
                - slope * line.iter().map(|p| p.0).sum::<f64>() / n;
            let t60 = (-KAPPA / slope).clamp(MIN_T60 * 1.0001, MAX_T60);
            Some((intercept.exp().clamp(MIN_GAIN, MAX_GAIN), t60))
        })
        .collect()
}

/// Variable projection over the whole late part: for fixed decay times the
/// band gains are a linear least-squares fit onto the decaying band noises,
/// so each band's log T60 is searched in turn (coarse grid, then golden
/// section) on the residual of that fit.
fn refine_by_projection<T: Real>(
    decoder: &FnsDecoder<T>,
    reference: &Signal<T>,
    start: &[Option<(f64, f64)>],
) -> Vec<Option<(f64, f64)>> {
    const SWEEPS: usize = 3;
    const GRID: usize = 9;
    const GOLDEN_STEPS: usize = 24;
    let end = reference.len().min(RIR_LEN);
    if end <= EARLY_LEN {
        return vec![None; N_BANDS];
    }
    let r: Vec<f64> = reference.samples()[EARLY_LEN..end]
        .iter()
        .map(|v| v.as_f64())
        .collect();
    let basis = |b: usize, t60: f64| -> Vec<f64> {
        let step = 10f64.powf(-3.0 / (t60 * f64::from(SAMPLE_RATE)));
        let mut env = step.powi(EARLY_LEN as i32);
        decoder.bands[b][EARLY_LEN..end]
            .iter()
            .map(|n| {
                let v = n.as_f64() * env;
                env *= step;
                v
            })
            .collect()
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let mut t60: Vec<f64> = start.iter().map(|p| p.map_or(0.3, |(_, t)| t)).collect();
    let mut cols: Vec<Vec<f64>> = (0..N_BANDS).map(|b| basis(b, t60[b])).collect();
    let mut gram = [[0.0; N_BANDS]; N_BANDS];
    let mut rhs = [0.0; N_BANDS];
    for j in 0..N_BANDS {
        for k in j..N_BANDS {
            gram[j][k] = dot(&cols[j], &cols[k]);
            gram[k][j] = gram[j][k];
        }
        rhs[j] = dot(&cols[j], &r);
    }
    // Residual energy up to the constant |r|²; lower is better.
    let score = |gram: &[[f64; N_BANDS]; N_BANDS], rhs: &[f64; N_BANDS]| {
        solve(*gram, *rhs).map_or(f64::INFINITY, |g| -dot(&g, rhs))
    };
    let (lo, hi) = ((MIN_T60 * 1.0001).ln(), MAX_T60.ln());
    for _ in 0..SWEEPS {
        for b in 0..N_BANDS {
            let with = |x: f64, gram: &mut [[f64; N_BANDS]; N_BANDS], rhs: &mut [f64; N_BANDS]| {
                let col = basis(b, x.exp());
                for k in 0..N_BANDS {
                    let v = if k == b {
                        dot(&col, &col)
                    } else {
                        dot(&col, &cols[k])
                    };
                    gram[b][k] = v;
                    gram[k][b] = v;
                }
                rhs[b] = dot(&col, &r);
                col
            };
            let eval = |x: f64| {
                let (mut g, mut h) = (gram, rhs);
                with(x, &mut g, &mut h);
                score(&g, &h)
            };
            let grid: Vec<f64> = (0..GRID)
                .map(|i| lo + (hi - lo) * i as f64 / (GRID - 1) as f64)
                .collect();
            let mut best = (t60[b].ln(), eval(t60[b].ln()));
            for &x in &grid {
                let f = eval(x);
                if f < best.1 {
                    best = (x, f);
                }
            }
            let cell = (hi - lo) / (GRID - 1) as f64;
            let (mut a, mut c) = ((best.0 - cell).max(lo), (best.0 + cell).min(hi));
            let phi = 0.5 * (5f64.sqrt() - 1.0);
            let (mut x1, mut x2) = (c - phi * (c - a), a + phi * (c - a));
            let (mut f1, mut f2) = (eval(x1), eval(x2));
            for _ in 0..GOLDEN_STEPS {
                if f1 < f2 {
                    c = x2;
                    (x2, f2) = (x1, f1);
                    x1 = c - phi * (c - a);
                    f1 = eval(x1);
                } else {
                    a = x1;
                    (x1, f1) = (x2, f2);
                    x2 = a + phi * (c - a);
                    f2 = eval(x2);
                }
            }
            for (x, f) in [(x1, f1), (x2, f2)] {
                if f < best.1 {
                    best = (x, f);
                }
            }
            t60[b] = best.0.exp();
            cols[b] = with(best.0, &mut gram, &mut rhs);
        }
    }
    let Some(g) = solve(gram, rhs) else {
        return vec![None; N_BANDS];
    };
    g.iter()
        .zip(&t60)
        .map(|(&g, &t)| (g > 0.0).then(|| (g.clamp(MIN_GAIN, MAX_GAIN), t)))
        .collect()
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn solve<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let piv = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            for k in col..N {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Per-band `(gain, T60)` read off the target: the decay time from the
/// Schroeder curve of the band-filtered late part, the gain by matching
/// that band's energy with the decoder's unit-gain band. `None` where the
/// band does not decay measurably.
fn analysis_proposal<T: Real>(
    decoder: &FnsDecoder<T>,
    reference: &Signal<T>,
) -> Result<Vec<Option<(f64, f64)>>> {
    let bank = OctaveFilterBank::<f64>::new(&fns_bands(), SAMPLE_RATE)?;
    let late_only = |x: Vec<f64>| {
        let mut x = x;
        x[..EARLY_LEN].iter_mut().for_each(|v| *v = 0.0);
        Signal::from_parts(x, SAMPLE_RATE)
    };
    let target = late_only(reference.samples().iter().map(|v| v.as_f64()).collect());
    let tail_energy = |x: &Signal<f64>| x.samples()[EARLY_LEN..].iter().map(|v| v * v).sum::<f64>();
    let mut unit = vec![T::zero(); RIR_LEN];
    (0..N_BANDS)
        .map(|b| {
            let y = bank.filter_band(b, &target)?;
            let tail = Signal::from_parts(y.samples()[EARLY_LEN..].to_vec(), SAMPLE_RATE);
            let Ok(t60) = schroeder_edc(&tail).and_then(|edc| edc.decay_time(-5.0, -25.0)) else {
                return Ok(None);
            };
            let t60 = t60.clamp(MIN_T60 * 1.0001, MAX_T60);
            decoder.band_contribution(b, 1.0, t60, &mut unit);
            let u = bank.filter_band(b, &late_only(unit.iter().map(|v| v.as_f64()).collect()))?;
            let (e_target, e_unit) = (tail_energy(&y), tail_energy(&u));
            Ok((e_unit > 0.0).then(|| ((e_target / e_unit).sqrt().clamp(MIN_GAIN, MAX_GAIN), t60)))
        })
        .collect()
}

/// Golden-section search on `[a, b]` with `n` evaluations. `known` is an
/// already evaluated point that competes for the minimum.
fn golden_section(
    mut a: f64,
    mut b: f64,
    n: usize,
    known: (f64, f64),
    mut f: impl FnMut(f64) -> Result<f64>,
) -> Result<(f64, f64)> {
    let mut best = known;
    let keep = |x: f64, fx: f64, best: &mut (f64, f64)| {
        if fx < best.1 {
            *best = (x, fx);
        }
    };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    keep(c, fc, &mut best);
    keep(d, fd, &mut best);
    for _ in 2..n {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
            keep(c, fc, &mut best);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
            keep(d, fd, &mut best);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fns::decode;
    use crate::loss::multires_stft_loss;

    #[test]
    fn golden_section_finds_parabola_minimum() {
        let (x, fx) =
            golden_section(-3.0, 5.0, 30, (5.0, 100.0), |x| Ok((x - 1.3) * (x - 1.3))).unwrap();
        assert!((x - 1.3).abs() < 1e-4 && fx < 1e-8);
    }

    #[test]
    fn known_point_wins_when_better() {
        let (x, _) = golden_section(0.0, 1.0, 4, (7.0, -1.0), Ok).unwrap();
        assert_eq!(x, 7.0);
    }

    #[test]
    fn fit_trace_and_final_loss_agree() {
        let p = FnsParams {
            early: {
                let mut e = vec![0.0; EARLY_LEN];
                e[100] = 0.5;
                e
            },
            band_gains: vec![0.03; N_BANDS],
            band_t60: vec![0.4; N_BANDS],
            noise_seed: 0,
        };
        let target: Signal<f64> = decode(&p).unwrap();
        let mcfg = MultiResConfig::default();
        let r = fit_to_rir(
            &target,
            &mcfg,
            &FitConfig {
                budget: 200,
                ..FitConfig::default()
            },
        )
        .unwrap();
        assert!(r.evaluations <= 200);
        assert!(r.loss_trace.windows(2).all(|w| w[1] <= w[0]));
        let fitted: Signal<f64> = decode(&r.params).unwrap();
        assert_eq!(
            multires_stft_loss(&target, &fitted, &mcfg).unwrap(),
            r.final_loss()
        );
    }

    #[test]
    fn preconditions() {
        let short = Signal::<f64>::impulse(1000, 0, 48000);
        let mcfg = MultiResConfig::default();
        assert!(matches!(
            fit_to_rir(&short, &mcfg, &FitConfig::default()),
            Err(Error::TooShort { .. })
        ));
        let ok = Signal::<f64>::impulse(48000, 0, 48000);
        assert!(fit_to_rir(
            &ok,
            &mcfg,
            &FitConfig {
                budget: 50,
                ..FitConfig::default()
            }
        )
        .is_err());
    }
}
