//! Samplers and integrators: exact Ornstein-Uhlenbeck transitions,
//! Euler-Maruyama steps, the Duffing flow under constant control, the
//! logistic flow in closed form, initial-condition samplers, and i.i.d.
//! training-pair generation.

use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Ornstein-Uhlenbeck process `dX = -alpha X dt + sqrt(2/beta) dW`.
///
/// The invariant distribution is `N(0, 1/(alpha beta))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OUParams {
    pub rate: f64,
    pub inverse_temperature: f64,
}

impl OUParams {
    pub fn new(rate: f64, inverse_temperature: f64) -> Result<Self> {
        if !(rate > 0.0) || !(inverse_temperature > 0.0) {
            return Err(Error::InvalidInput(format!(
                "OU parameters must be positive, got rate = {rate}, beta = {inverse_temperature}"
            )));
        }
        Ok(Self {
            rate,
            inverse_temperature,
        })
    }

    pub fn invariant_variance(&self) -> f64 {
        1.0 / (self.rate * self.inverse_temperature)
    }

    pub fn transition_mean(&self, x: f64, t: f64) -> f64 {
        (-self.rate * t).exp() * x
    }

    pub fn transition_variance(&self, t: f64) -> f64 {
        (1.0 - (-2.0 * self.rate * t).exp()) / (self.rate * self.inverse_temperature)
    }
}

/// Draw from the exact OU transition distribution
/// `N(e^{-alpha t} x, (1 - e^{-2 alpha t})/(alpha beta))`; no discretization
/// error. `t = 0` degenerates to the initial point.
pub fn ou_transition_sample(p: &OUParams, x: f64, t: f64, rng: &mut impl Rng) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::InvalidInput(format!(
            "time must be nonnegative, got {t}"
        )));
    }
    let mean = p.transition_mean(x, t);
    let sd = p.transition_variance(t).sqrt();
    let z: f64 = rng.sample(StandardNormal);
    Ok(mean + sd * z)
}

/// One Euler-Maruyama step `x + b(x) dt + sigma(x) sqrt(dt) xi` with diagonal
/// noise.
pub fn em_sde_step(
    drift: impl Fn(&[f64]) -> Vec<f64>,
    diffusion: impl Fn(&[f64]) -> Vec<f64>,
    x: &[f64],
    dt: f64,
    rng: &mut impl Rng,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step size must be positive, got {dt}"
        )));
    }
    let b = drift(x);
    let s = diffusion(x);
    let sqdt = dt.sqrt();
    Ok(x.iter()
        .zip(b.iter().zip(&s))
        .map(|(&xi, (&bi, &si))| {
            let z: f64 = rng.sample(StandardNormal);
            xi + bi * dt + si * sqdt * z
        })
        .collect())
}

/// Duffing oscillator `z1' = z2`, `z2' = -alpha z1 u - 2 beta z1^3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuffingParams {
    pub alpha: f64,
    pub beta: f64,
}

impl DuffingParams {
    pub fn vector_field(&self, z: [f64; 2], u: f64) -> [f64; 2] {
        [z[1], -self.alpha * z[0] * u - 2.0 * self.beta * z[0].powi(3)]
    }
}

/// Trajectory on a uniform time grid, with the piecewise-constant control
/// applied on each step interval (empty for autonomous runs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub control: Vec<f64>,
}

fn rk4_step_2d(p: &DuffingParams, z: [f64; 2], u: f64, h: f64) -> [f64; 2] {
    let k1 = p.vector_field(z, u);
    let k2 = p.vector_field([z[0] + 0.5 * h * k1[0], z[1] + 0.5 * h * k1[1]], u);
    let k3 = p.vector_field([z[0] + 0.5 * h * k2[0], z[1] + 0.5 * h * k2[1]], u);
    let k4 = p.vector_field([z[0] + h * k3[0], z[1] + h * k3[1]], u);
    [
        z[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        z[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Classical fixed-step RK4 integration of the Duffing system under constant
/// control. `t_final` must be an integer multiple of `dt`; no partial steps.
pub fn integrate_duffing(
    p: &DuffingParams,
    z0: [f64; 2],
    u: f64,
    t_final: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!(
            "step size must be positive, got {dt}"
        )));
    }
    if t_final < 0.0 {
        return Err(Error::InvalidInput(format!(
            "final time must be nonnegative, got {t_final}"
        )));
    }
    let steps_f = t_final / dt;
    let steps = steps_f.round();
    if (steps_f - steps).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "t_final = {t_final} is not an integer multiple of dt = {dt}"
        )));
    }
    let steps = steps as usize;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let mut z = z0;
    times.push(0.0);
    states.push(z.to_vec());
    for k in 0..steps {
        z = rk4_step_2d(p, z, u, dt);
        times.push((k + 1) as f64 * dt);
        states.push(z.to_vec());
    }
    Ok(Trajectory {
        times,
        states,
        control: vec![u; steps],
    })
}

/// Duffing flow after time `t_final`; convenience over [`integrate_duffing`].
pub fn duffing_flow(
    p: &DuffingParams,
    z0: [f64; 2],
    u: f64,
    t_final: f64,
    dt: f64,
) -> Result<[f64; 2]> {
    if t_final == 0.0 {
        return Ok(z0);
    }
    let steps_f = t_final / dt;
    let steps = steps_f.round();
    if !(dt > 0.0) || t_final < 0.0 {
        return Err(Error::InvalidInput(format!(
            "bad integration window t_final = {t_final}, dt = {dt}"
        )));
    }
    if (steps_f - steps).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(Error::InvalidInput(format!(
            "t_final = {t_final} is not an integer multiple of dt = {dt}"
        )));
    }
    let mut z = z0;
    for _ in 0..steps as usize {
        z = rk4_step_2d(p, z, u, dt);
    }
    Ok(z)
}

/// Closed-form flow of `x' = x(2 - x)` on `[1, 2]`:
/// `x(t; x0) = 2 e^{2t} x0 / (2 - x0 + e^{2t} x0)`.
pub fn logistic_flow_exact(x0: f64, t: f64) -> f64 {
    let g = (2.0 * t).exp();
    2.0 * g * x0 / (2.0 - x0 + g * x0)
}

/// Initial-condition laws used in the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitialLaw {
    /// Gaussian `N(mean, var)` restricted to `[lo, hi]` and renormalized to a
    /// probability measure; sampled by inverse CDF so that each draw consumes
    /// exactly one uniform.
    TruncatedGaussian { mean: f64, var: f64, lo: f64, hi: f64 },
    /// Uniform on an axis-aligned box.
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
}

impl InitialLaw {
    pub fn dim(&self) -> usize {
        match self {
            InitialLaw::TruncatedGaussian { .. } => 1,
            InitialLaw::UniformBox { lo, .. } => lo.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            InitialLaw::TruncatedGaussian { var, lo, hi, .. } => {
                if !(*var > 0.0) {
                    return Err(Error::InvalidInput("variance must be positive".into()));
                }
                if !(hi > lo) {
                    return Err(Error::InvalidInput(format!("empty interval [{lo}, {hi}]")));
                }
                Ok(())
            }
            InitialLaw::UniformBox { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(Error::InvalidInput(
                        "box bounds must be non-empty and of equal length".into(),
                    ));
                }
                if lo.iter().zip(hi).any(|(a, b)| !(b > a)) {
                    return Err(Error::InvalidInput("box must have positive volume".into()));
                }
                Ok(())
            }
        }
    }
}

/// Sampler for a fixed law with precomputed truncation constants.
pub struct InitialSampler {
    law: InitialLaw,
    normal: Option<Normal>,
    cdf_lo: f64,
    cdf_hi: f64,
}

impl InitialSampler {
    pub fn new(law: InitialLaw) -> Result<Self> {
        law.validate()?;
        let (normal, cdf_lo, cdf_hi) = match &law {
            InitialLaw::TruncatedGaussian { mean, var, lo, hi } => {
                let n = Normal::new(*mean, var.sqrt()).expect("validated parameters");
                let (a, b) = (n.cdf(*lo), n.cdf(*hi));
                (Some(n), a, b)
            }
            InitialLaw::UniformBox { .. } => (None, 0.0, 1.0),
        };
        Ok(Self {
            law,
            normal,
            cdf_lo,
            cdf_hi,
        })
    }

    pub fn dim(&self) -> usize {
        self.law.dim()
    }

    pub fn draw(&self, rng: &mut impl Rng, out: &mut [f64]) {
        match &self.law {
            InitialLaw::TruncatedGaussian { .. } => {
                let u: f64 = rng.gen();
                let p = self.cdf_lo + u * (self.cdf_hi - self.cdf_lo);
                out[0] = self.normal.as_ref().unwrap().inverse_cdf(p);
            }
            InitialLaw::UniformBox { lo, hi } => {
                for ((slot, &a), &b) in out.iter_mut().zip(lo).zip(hi) {
                    *slot = rng.gen_range(a..b);
                }
            }
        }
    }
}

/// Draw `m` i.i.d. initial conditions.
pub fn sample_initials(law: &InitialLaw, m: usize, stream: RngStream) -> Result<Array2<f64>> {
    if m == 0 {
        return Err(Error::InvalidInput("sample count must be >= 1".into()));
    }
    let sampler = InitialSampler::new(law.clone())?;
    let d = law.dim();
    let mut rng = stream.rng();
    let mut out = Array2::zeros((m, d));
    let mut buf = vec![0.0; d];
    for i in 0..m {
        sampler.draw(&mut rng, &mut buf);
        for (j, &v) in buf.iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// i.i.d. training pairs `(x_k, y_k)` with `x_k` from the initial law and
/// `y_k` from the time-`t` transition started at `x_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataPairs {
    pub x: Array2<f64>,
    pub y: Array2<f64>,
    pub lag: f64,
    pub seed: u64,
    pub stream: u64,
}

impl DataPairs {
    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.x.ncols()
    }

    /// Columnar text serialization: provenance header, then one row per pair.
    pub fn to_csv(&self, mut w: impl Write) -> std::io::Result<()> {
        writeln!(w, "# t = {:e}", self.lag)?;
        writeln!(w, "# seed = {}", self.seed)?;
        writeln!(w, "# stream = {}", self.stream)?;
        let d = self.dim();
        let header: Vec<String> = (0..d)
            .map(|j| format!("x{j}"))
            .chain((0..d).map(|j| format!("y{j}")))
            .collect();
        writeln!(w, "{}", header.join(","))?;
        for i in 0..self.len() {
            let row: Vec<String> = self
                .x
                .row(i)
                .iter()
                .chain(self.y.row(i).iter())
                .map(|v| format!("{v:.16e}"))
                .collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.to_csv(std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }

    pub fn from_csv(r: impl BufRead, path: &Path) -> Result<Self> {
        let mut lag = None;
        let mut seed = 0u64;
        let mut stream = 0u64;
        let mut dim = None;
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            message,
        };
        for line in r.lines() {
            let line = line.map_err(|e| Error::io(path, e))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let mut parts = rest.splitn(2, '=');
                let key = parts.next().unwrap_or("").trim();
                let val = parts.next().unwrap_or("").trim();
                match key {
                    "t" => {
                        lag = Some(
                            val.parse()
                                .map_err(|_| parse_err(format!("bad t: {val}")))?,
                        )
                    }
                    "seed" => {
                        seed = val
                            .parse()
                            .map_err(|_| parse_err(format!("bad seed: {val}")))?
                    }
                    "stream" => {
                        stream = val
                            .parse()
                            .map_err(|_| parse_err(format!("bad stream: {val}")))?
                    }
                    _ => {}
                }
                continue;
            }
            if line.starts_with('x') {
                let cols = line.split(',').count();
                dim = Some(cols / 2);
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse()
                        .map_err(|_| parse_err(format!("bad number: {v}")))
                })
                .collect::<Result<_>>()?;
            let d = dim.ok_or_else(|| parse_err("missing header row".into()))?;
            if vals.len() != 2 * d {
                return Err(parse_err(format!(
                    "expected {} columns, got {}",
                    2 * d,
                    vals.len()
                )));
            }
            xs.extend_from_slice(&vals[..d]);
            ys.extend_from_slice(&vals[d..]);
        }
        let d = dim.ok_or_else(|| parse_err("no header row".into()))?;
        let m = xs.len() / d;
        Ok(DataPairs {
            x: Array2::from_shape_vec((m, d), xs).map_err(|e| parse_err(e.to_string()))?,
            y: Array2::from_shape_vec((m, d), ys).map_err(|e| parse_err(e.to_string()))?,
            lag: lag.ok_or_else(|| parse_err("missing t header".into()))?,
            seed,
            stream,
        })
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(std::io::BufReader::new(file), path)
    }
}

/// The system propagating initial samples to their time-`t` successors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PairSystem {
    /// Exact OU transition sampling (default for OU experiments).
    OuExact(OUParams),
    /// Euler-Maruyama discretization of the OU process with elementary step
    /// `dt`; retained to mirror the fixed-step pipeline and for generic SDEs.
    OuEulerMaruyama { params: OUParams, dt: f64 },
    /// Deterministic Duffing flow under constant control.
    Duffing {
        params: DuffingParams,
        control: f64,
        dt: f64,
    },
}

/// Generate i.i.d. pairs from `mu_{0,t}(x, y) = rho_t(x, dy) dmu(x)`.
pub fn generate_pairs(
    system: &PairSystem,
    t: f64,
    m: usize,
    law: &InitialLaw,
    stream: RngStream,
) -> Result<DataPairs> {
    if m == 0 {
        return Err(Error::InvalidInput("sample count must be >= 1".into()));
    }
    if t < 0.0 {
        return Err(Error::InvalidInput(format!(
            "lag must be nonnegative, got {t}"
        )));
    }
    let sampler = InitialSampler::new(law.clone())?;
    let d = law.dim();
    let mut rng = stream.rng();
    let mut x = Array2::zeros((m, d));
    let mut y = Array2::zeros((m, d));
    let mut buf = vec![0.0; d];
    for i in 0..m {
        sampler.draw(&mut rng, &mut buf);
        for (j, &v) in buf.iter().enumerate() {
            x[(i, j)] = v;
        }
        match system {
            PairSystem::OuExact(p) => {
                y[(i, 0)] = ou_transition_sample(p, buf[0], t, &mut rng)?;
            }
            PairSystem::OuEulerMaruyama { params, dt } => {
                let steps = (t / dt).round() as usize;
                let drift = |s: &[f64]| vec![-params.rate * s[0]];
                let diff_coef = (2.0 / params.inverse_temperature).sqrt();
                let diffusion = |_: &[f64]| vec![diff_coef];
                let mut state = vec![buf[0]];
                for _ in 0..steps {
                    state = em_sde_step(&drift, &diffusion, &state, *dt, &mut rng)?;
                }
                y[(i, 0)] = state[0];
            }
            PairSystem::Duffing { params, control, dt } => {
                let z = duffing_flow(params, [buf[0], buf[1]], *control, t, *dt)?;
                y[(i, 0)] = z[0];
                y[(i, 1)] = z[1];
            }
        }
    }
    Ok(DataPairs {
        x,
        y,
        lag: t,
        seed: stream.seed,
        stream: stream.stream,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ou() -> OUParams {
        OUParams::new(1.0, 2.0).unwrap()
    }

    #[test]
    fn ou_transition_moments() {
        // Sample mean and variance over 1e6 draws against the exact values,
        // within four standard errors.
        let p = ou();
        let mut rng = RngStream::new(100, 0).rng();
        let n = 1_000_000;
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let y = ou_transition_sample(&p, 1.0, 0.05, &mut rng).unwrap();
            s1 += y;
            s2 += y * y;
        }
        let mean = s1 / n as f64;
        let var = s2 / n as f64 - mean * mean;
        let exact_mean = (-0.05f64).exp();
        let exact_var = p.transition_variance(0.05);
        assert!((exact_mean - 0.951229424500714).abs() < 1e-14);
        assert!((exact_var - 0.047581290982020213).abs() < 1e-15);
        let se_mean = exact_var.sqrt() / (n as f64).sqrt();
        let se_var = exact_var * (2.0 / n as f64).sqrt();
        assert!((mean - exact_mean).abs() < 4.0 * se_mean, "mean {mean}");
        assert!((var - exact_var).abs() < 4.0 * se_var, "var {var}");
    }

    #[test]
    fn ou_long_time_reaches_invariant() {
        let p = ou();
        assert!((p.transition_variance(60.0) - p.invariant_variance()).abs() < 1e-15);
        assert!((p.invariant_variance() - 0.5).abs() < 1e-15);
        assert!(p.transition_mean(3.0, 60.0).abs() < 1e-15);
    }

    #[test]
    fn ou_zero_start_symmetric_mean() {
        let p = ou();
        for t in [0.01, 0.3, 2.0] {
            assert_eq!(p.transition_mean(0.0, t), 0.0);
        }
    }

    #[test]
    fn ou_negative_time_rejected() {
        let p = ou();
        let mut rng = RngStream::new(0, 0).rng();
        assert!(ou_transition_sample(&p, 0.0, -0.1, &mut rng).is_err());
    }

    #[test]
    fn chapman_kolmogorov_moments() {
        // Composing transitions over t then s matches the (t+s) transition in
        // its first two moments, exactly at the level of the OU Gaussians and
        // within Monte-Carlo error for the sampler.
        let p = ou();
        let (t, s, x0) = (0.07, 0.13, 0.8);
        let m1 = p.transition_mean(p.transition_mean(x0, t), s);
        let v1 = p.transition_variance(t) * (-2.0 * p.rate * s).exp() + p.transition_variance(s);
        assert!((m1 - p.transition_mean(x0, t + s)).abs() < 1e-15);
        assert!((v1 - p.transition_variance(t + s)).abs() < 1e-15);

        let mut rng = RngStream::new(8, 0).rng();
        let n = 200_000;
        let (mut a1, mut a2) = (0.0, 0.0);
        for _ in 0..n {
            let mid = ou_transition_sample(&p, x0, t, &mut rng).unwrap();
            let y = ou_transition_sample(&p, mid, s, &mut rng).unwrap();
            a1 += y;
            a2 += y * y;
        }
        let mean = a1 / n as f64;
        let var = a2 / n as f64 - mean * mean;
        let vexact = p.transition_variance(t + s);
        assert!((mean - p.transition_mean(x0, t + s)).abs() < 4.0 * (vexact / n as f64).sqrt());
        assert!((var - vexact).abs() < 4.0 * vexact * (2.0 / n as f64).sqrt());
    }

    #[test]
    fn em_zero_fields_identity() {
        let mut rng = RngStream::new(1, 0).rng();
        let x = vec![0.3, -0.4];
        let y = em_sde_step(|_| vec![0.0, 0.0], |_| vec![0.0, 0.0], &x, 0.01, &mut rng).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn em_deterministic_reduces_to_euler() {
        let mut rng = RngStream::new(1, 0).rng();
        let y = em_sde_step(|s| vec![2.0 * s[0]], |_| vec![0.0], &[1.0], 0.1, &mut rng).unwrap();
        assert!((y[0] - 1.2).abs() < 1e-15);
    }

    #[test]
    fn em_five_steps_close_to_exact_transition() {
        // Two-sample Kolmogorov-Smirnov statistic between the 5-step EM
        // distribution and the exact transition, 1e5 draws each.
        let p = ou();
        let (dt, t, x0) = (0.01, 0.05, 1.0);
        let n = 100_000;
        let mut rng = RngStream::new(77, 0).rng();
        let drift = |s: &[f64]| vec![-p.rate * s[0]];
        let coef = (2.0 / p.inverse_temperature).sqrt();
        let diffusion = move |_: &[f64]| vec![coef];
        let mut em: Vec<f64> = (0..n)
            .map(|_| {
                let mut s = vec![x0];
                for _ in 0..5 {
                    s = em_sde_step(&drift, &diffusion, &s, dt, &mut rng).unwrap();
                }
                s[0]
            })
            .collect();
        let mut exact: Vec<f64> = (0..n)
            .map(|_| ou_transition_sample(&p, x0, t, &mut rng).unwrap())
            .collect();
        em.sort_by(|a, b| a.total_cmp(b));
        exact.sort_by(|a, b| a.total_cmp(b));
        let mut ks = 0.0f64;
        let (mut i, mut j) = (0usize, 0usize);
        while i < n && j < n {
            if em[i] <= exact[j] {
                i += 1;
            } else {
                j += 1;
            }
            ks = ks.max((i as f64 / n as f64 - j as f64 / n as f64).abs());
        }
        assert!(ks < 0.02, "KS statistic {ks}");
    }

    #[test]
    fn duffing_origin_is_equilibrium() {
        let p = DuffingParams {
            alpha: -1.0,
            beta: 1.0,
        };
        let traj = integrate_duffing(&p, [0.0, 0.0], 0.7, 0.5, 0.005).unwrap();
        for s in &traj.states {
            assert_eq!(s, &vec![0.0, 0.0]);
        }
        assert_eq!(traj.times.len(), 101);
    }

    #[test]
    fn duffing_algebraic_equilibrium() {
        // With alpha = -1, beta = 1, u = 1: z2' = z1 - 2 z1^3 vanishes at
        // z1 = 1/sqrt(2).
        let p = DuffingParams {
            alpha: -1.0,
            beta: 1.0,
        };
        let z1 = 0.5f64.sqrt();
        let f = p.vector_field([z1, 0.0], 1.0);
        assert!(f[0].abs() < 1e-16 && f[1].abs() < 1e-15);
        let end = duffing_flow(&p, [z1, 0.0], 1.0, 0.25, 0.005).unwrap();
        assert!((end[0] - z1).abs() < 1e-12 && end[1].abs() < 1e-12);
    }

    #[test]
    fn duffing_step_halving() {
        let p = DuffingParams {
            alpha: -1.0,
            beta: 1.0,
        };
        let coarse = duffing_flow(&p, [1.0, 0.5], 0.0, 0.025, 0.005).unwrap();
        let fine = duffing_flow(&p, [1.0, 0.5], 0.0, 0.025, 0.0005).unwrap();
        let gap = (coarse[0] - fine[0]).abs().max((coarse[1] - fine[1]).abs());
        assert!(gap <= 1e-6, "step-halving gap {gap}");
    }

    #[test]
    fn duffing_odd_symmetry() {
        let p = DuffingParams {
            alpha: -1.0,
            beta: 1.0,
        };
        let a = duffing_flow(&p, [0.9, -0.3], 0.4, 0.5, 0.005).unwrap();
        let b = duffing_flow(&p, [-0.9, 0.3], 0.4, 0.5, 0.005).unwrap();
        assert!((a[0] + b[0]).abs() < 1e-12);
        assert!((a[1] + b[1]).abs() < 1e-12);
    }

    #[test]
    fn duffing_partial_step_rejected() {
        let p = DuffingParams {
            alpha: -1.0,
            beta: 1.0,
        };
        assert!(integrate_duffing(&p, [0.1, 0.0], 0.0, 0.0317, 0.005).is_err());
    }

    #[test]
    fn logistic_fixed_point_and_identity() {
        assert_eq!(logistic_flow_exact(2.0, 0.0), 2.0);
        assert_eq!(logistic_flow_exact(2.0, 3.7), 2.0);
        assert_eq!(logistic_flow_exact(1.0, 0.0), 1.0);
    }

    #[test]
    fn logistic_matches_rk4() {
        // Reference value 2 e^2 / (1 + e^2) cross-checked by integrating
        // x' = x(2 - x) with RK4 at a fine step.
        let exact = logistic_flow_exact(1.0, 1.0);
        assert!((exact - 1.76159415595576489).abs() < 1e-14);
        let mut x: f64 = 1.0;
        let h = 1e-4;
        for _ in 0..10_000 {
            let f = |v: f64| v * (2.0 - v);
            let k1 = f(x);
            let k2 = f(x + 0.5 * h * k1);
            let k3 = f(x + 0.5 * h * k2);
            let k4 = f(x + h * k3);
            x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        assert!((exact - x).abs() < 1e-6);
    }

    #[test]
    fn logistic_semigroup_property() {
        for x0 in [1.0, 1.3, 1.9] {
            for (t, s) in [(0.2, 0.5), (1.0, 2.0)] {
                let a = logistic_flow_exact(logistic_flow_exact(x0, t), s);
                let b = logistic_flow_exact(x0, t + s);
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn logistic_monotone_in_time(x0 in 1.0..1.999f64, t in 0.0..4.0f64, dt in 0.01..2.0f64) {
            let a = logistic_flow_exact(x0, t);
            let b = logistic_flow_exact(x0, t + dt);
            prop_assert!(b >= a - 1e-15);
            prop_assert!(b <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn uniform_box_moments() {
        let law = InitialLaw::UniformBox {
            lo: vec![-1.5, -1.5],
            hi: vec![1.5, 1.5],
        };
        let x = sample_initials(&law, 1_000_000, RngStream::new(21, 0)).unwrap();
        let n = x.nrows() as f64;
        for j in 0..2 {
            let col = x.column(j);
            let mean = col.sum() / n;
            let var = col.iter().map(|v| v * v).sum::<f64>() / n - mean * mean;
            // Exact uniform variance is 3^2/12 = 0.75.
            let se_mean = (0.75f64 / n).sqrt();
            let se_var = 0.75 * (2.0 / n).sqrt();
            assert!(mean.abs() < 4.0 * se_mean);
            assert!((var - 0.75).abs() < 4.0 * se_var);
        }
    }

    #[test]
    fn truncated_gaussian_support_and_determinism() {
        let law = InitialLaw::TruncatedGaussian {
            mean: 0.0,
            var: 0.5,
            lo: -1.5,
            hi: 1.5,
        };
        let x = sample_initials(&law, 20_000, RngStream::new(5, 3)).unwrap();
        assert!(x.iter().all(|&v| (-1.5..=1.5).contains(&v)));
        let y = sample_initials(&law, 20_000, RngStream::new(5, 3)).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn single_sample() {
        let law = InitialLaw::UniformBox {
            lo: vec![0.0],
            hi: vec![1.0],
        };
        let x = sample_initials(&law, 1, RngStream::new(0, 0)).unwrap();
        assert_eq!(x.nrows(), 1);
    }

    #[test]
    fn empty_region_rejected() {
        let law = InitialLaw::TruncatedGaussian {
            mean: 0.0,
            var: 1.0,
            lo: 1.0,
            hi: 1.0,
        };
        assert!(sample_initials(&law, 5, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn pairs_identity_at_zero_lag() {
        let system = PairSystem::Duffing {
            params: DuffingParams {
                alpha: -1.0,
                beta: 1.0,
            },
            control: 0.0,
            dt: 0.005,
        };
        let law = InitialLaw::UniformBox {
            lo: vec![-1.5, -1.5],
            hi: vec![1.5, 1.5],
        };
        let pairs = generate_pairs(&system, 0.0, 50, &law, RngStream::new(4, 0)).unwrap();
        assert_eq!(pairs.x, pairs.y);
    }

    #[test]
    fn pairs_ou_correlation() {
        // corr(x, y) for the exact transition started from the truncated
        // invariant law, against the analytic value from the truncated
        // variance; the Monte-Carlo estimate must agree within 4 SE.
        let p = ou();
        let t = 0.05;
        let law = InitialLaw::TruncatedGaussian {
            mean: 0.0,
            var: 0.5,
            lo: -1.5,
            hi: 1.5,
        };
        let m = 200_000;
        let pairs =
            generate_pairs(&PairSystem::OuExact(p), t, m, &law, RngStream::new(31, 0)).unwrap();
        let n = m as f64;
        let mx = pairs.x.column(0).sum() / n;
        let my = pairs.y.column(0).sum() / n;
        let (mut cxy, mut vx, mut vy) = (0.0, 0.0, 0.0);
        for i in 0..m {
            let a = pairs.x[(i, 0)] - mx;
            let b = pairs.y[(i, 0)] - my;
            cxy += a * b;
            vx += a * a;
            vy += b * b;
        }
        let corr = cxy / (vx.sqrt() * vy.sqrt());
        // Truncated variance of N(0, 0.5) on [-1.5, 1.5] in closed form:
        // v (1 - 2 a phi(a) / (2 Phi(a) - 1)) at a = 1.5 / sqrt(0.5).
        let v_trunc = 0.40767286848315996;
        let decay = (-p.rate * t).exp();
        let expected = decay * v_trunc
            / (v_trunc * (decay * decay * v_trunc + p.transition_variance(t))).sqrt();
        assert!((expected - 0.941141831260111).abs() < 1e-12);
        let se = (1.0 - expected * expected) / n.sqrt();
        assert!((corr - expected).abs() < 4.0 * se, "corr {corr} vs {expected}");
    }

    #[test]
    fn pairs_duffing_exit_initial_domain() {
        // Time-shifted points can leave the sampling box: the initial domain
        // is not invariant.
        let system = PairSystem::Duffing {
            params: DuffingParams {
                alpha: -1.0,
                beta: 1.0,
            },
            control: 0.0,
            dt: 0.005,
        };
        let law = InitialLaw::UniformBox {
            lo: vec![-1.5, -1.5],
            hi: vec![1.5, 1.5],
        };
        let pairs = generate_pairs(&system, 0.025, 4000, &law, RngStream::new(12, 0)).unwrap();
        let exited = (0..pairs.len())
            .filter(|&i| pairs.y[(i, 0)].abs() > 1.5 || pairs.y[(i, 1)].abs() > 1.5)
            .count();
        assert!(exited > 0, "expected some successors outside the box");
    }

    #[test]
    fn pairs_csv_roundtrip() {
        let system = PairSystem::OuExact(ou());
        let law = InitialLaw::TruncatedGaussian {
            mean: 0.0,
            var: 0.5,
            lo: -1.5,
            hi: 1.5,
        };
        let pairs = generate_pairs(&system, 0.05, 37, &law, RngStream::new(9, 2)).unwrap();
        let mut buf = Vec::new();
        pairs.to_csv(&mut buf).unwrap();
        let back = DataPairs::from_csv(std::io::Cursor::new(&buf), Path::new("mem")).unwrap();
        assert_eq!(pairs, back);
    }

    #[test]
    fn samplers_bit_reproducible() {
        let system = PairSystem::OuExact(ou());
        let law = InitialLaw::TruncatedGaussian {
            mean: 0.0,
            var: 0.5,
            lo: -1.5,
            hi: 1.5,
        };
        let a = generate_pairs(&system, 0.05, 100, &law, RngStream::new(9, 2)).unwrap();
        let b = generate_pairs(&system, 0.05, 100, &law, RngStream::new(9, 2)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn em_stream_independence() {
        let p = ou();
        let mut r0 = RngStream::new(3, 0).rng();
        let mut r1 = RngStream::new(3, 1).rng();
        let a = ou_transition_sample(&p, 0.5, 0.1, &mut r0).unwrap();
        let b = ou_transition_sample(&p, 0.5, 0.1, &mut r1).unwrap();
        assert_ne!(a, b);
    }
}
