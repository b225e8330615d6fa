//! Seeded rough forcings: spectral white noise and cylindrical Wiener
//! increments, drawn from a counter-based generator so that any
//! `(step, mode)` entry is addressable without replaying the stream.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function_spaces::{MeasurementVector, TestSpace};

/// Independent generator families derived from one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    WhiteNoise = 1,
    Wiener = 2,
    Manufactured = 3,
}

fn generator(seed: u64, purpose: Purpose, stream: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

fn box_muller(a: u64, b: u64) -> f64 {
    let u1 = ((a >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = (b >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Standard normals `offset..offset + count` of stream `stream`.
pub fn standard_normals(seed: u64, purpose: Purpose, stream: u64, offset: u64, count: usize) -> Vec<f64> {
    let mut rng = generator(seed, purpose, stream);
    rng.set_word_pos(4 * offset as u128);
    (0..count)
        .map(|_| {
            let a = rng.next_u64();
            let b = rng.next_u64();
            box_muller(a, b)
        })
        .collect()
}

/// `L` i.i.d. standard normal coefficients of `Σ ξ_j √2 sin(πjx)`.
pub fn sample_white_noise_spectral(modes: usize, seed: u64) -> Result<MeasurementVector> {
    let space = TestSpace::sine_1d(modes)?;
    MeasurementVector::from_vec(space, standard_normals(seed, Purpose::WhiteNoise, 0, 0, modes))
}

/// Where increments live: sine coefficients or tent projections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "size")]
pub enum NoiseMode {
    Spectral(usize),
    Fem(usize),
}

impl NoiseMode {
    pub fn len(self) -> usize {
        match self {
            NoiseMode::Spectral(l) | NoiseMode::Fem(l) => l,
        }
    }

    pub fn is_empty(self) -> bool {
        self.len() == 0
    }

    pub fn space(self) -> Result<TestSpace> {
        match self {
            NoiseMode::Spectral(l) => TestSpace::sine_1d(l),
            NoiseMode::Fem(n) => TestSpace::fem_1d(n),
        }
    }
}

fn lower_mass_factor(space: TestSpace) -> DMatrix<f64> {
    space
        .mass_matrix()
        .cholesky()
        .expect("mass matrix is positive definite")
        .l()
}

/// One increment `[Δξ, φ]` over a step of length `dt`: `N(0, dt)`
/// coefficients in spectral mode, `L_mass z √dt` in tent mode.
pub fn sample_wiener_increment(mode: NoiseMode, dt: f64, seed: u64, step: u64) -> Result<MeasurementVector> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::invalid(format!("increment length must be positive, got {dt}")));
    }
    let space = mode.space()?;
    let z = standard_normals(seed, Purpose::Wiener, step, 0, mode.len());
    let values = match mode {
        NoiseMode::Spectral(_) => z.iter().map(|z| z * dt.sqrt()).collect(),
        NoiseMode::Fem(_) => {
            let l = lower_mass_factor(space);
            (l * nalgebra::DVector::from_vec(z) * dt.sqrt()).data.into()
        }
    };
    MeasurementVector::from_vec(space, values)
}

/// A Brownian path described by its seed and parameters; increments are
/// regenerated on demand. Coarse paths sum `aggregation` consecutive fine
/// increments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoisePath {
    pub seed: u64,
    pub mode: NoiseMode,
    pub fine_dt: f64,
    pub fine_steps: u64,
    pub aggregation: u64,
}

const PATH_MAGIC: &[u8; 8] = b"NESPATH1";

impl NoisePath {
    pub fn new(seed: u64, mode: NoiseMode, fine_dt: f64, fine_steps: u64) -> Result<Self> {
        if !(fine_dt > 0.0) || !fine_dt.is_finite() {
            return Err(Error::invalid(format!(
                "increment length must be positive, got {fine_dt}"
            )));
        }
        if mode.is_empty() {
            return Err(Error::invalid("noise needs at least one mode"));
        }
        Ok(NoisePath {
            seed,
            mode,
            fine_dt,
            fine_steps,
            aggregation: 1,
        })
    }

    pub fn dt(&self) -> f64 {
        self.fine_dt * self.aggregation as f64
    }

    pub fn steps(&self) -> usize {
        (self.fine_steps / self.aggregation) as usize
    }

    /// Coarse path whose increments are sums of `k` consecutive increments.
    pub fn aggregate(&self, k: u64) -> Result<Self> {
        if k == 0 || self.steps() as u64 % k != 0 {
            return Err(Error::invalid(format!(
                "{} steps are not divisible by {k}",
                self.steps()
            )));
        }
        Ok(NoisePath {
            aggregation: self.aggregation * k,
            ..self.clone()
        })
    }

    /// Increment of coarse step `j`.
    pub fn increment(&self, j: usize) -> Result<Vec<f64>> {
        if j >= self.steps() {
            return Err(Error::invalid(format!(
                "step {j} beyond the {} steps of the path",
                self.steps()
            )));
        }
        let first = j as u64 * self.aggregation;
        let mut acc = sample_wiener_increment(self.mode, self.fine_dt, self.seed, first)?
            .as_slice()
            .to_vec();
        for step in first + 1..first + self.aggregation {
            let inc = sample_wiener_increment(self.mode, self.fine_dt, self.seed, step)?;
            acc.iter_mut().zip(inc.as_slice()).for_each(|(a, b)| *a += b);
        }
        Ok(acc)
    }

    /// All increments in order.
    pub fn increments(&self) -> Result<Vec<Vec<f64>>> {
        (0..self.steps()).map(|j| self.increment(j)).collect()
    }

    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        let (tag, size) = match self.mode {
            NoiseMode::Spectral(l) => (0u64, l as u64),
            NoiseMode::Fem(n) => (1u64, n as u64),
        };
        w.write_all(PATH_MAGIC)?;
        for v in [self.seed, tag, size] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.fine_dt.to_le_bytes())?;
        for v in [self.fine_steps, self.aggregation] {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != PATH_MAGIC {
            return Err(Error::Format("not a noise path record".into()));
        }
        let mut word = || -> Result<[u8; 8]> {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            Ok(b)
        };
        let seed = u64::from_le_bytes(word()?);
        let tag = u64::from_le_bytes(word()?);
        let size = u64::from_le_bytes(word()?) as usize;
        let fine_dt = f64::from_le_bytes(word()?);
        let fine_steps = u64::from_le_bytes(word()?);
        let aggregation = u64::from_le_bytes(word()?);
        let mode = match tag {
            0 => NoiseMode::Spectral(size),
            1 => NoiseMode::Fem(size),
            t => return Err(Error::Format(format!("unknown noise mode tag {t}"))),
        };
        let path = NoisePath::new(seed, mode, fine_dt, fine_steps)?;
        if aggregation == 0 || fine_steps % aggregation != 0 {
            return Err(Error::Format("inconsistent aggregation factor".into()));
        }
        Ok(NoisePath { aggregation, ..path })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_binary(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_binary(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }

    /// Raw increments as CSV rows `step,index,value`.
    pub fn write_csv(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "step,index,value")?;
        for j in 0..self.steps() {
            for (i, v) in self.increment(j)?.iter().enumerate() {
                writeln!(w, "{j},{},{v:e}", i + 1)?;
            }
        }
        Ok(())
    }
}

/// `T[a][j] = ⟨√2 sin(π j x), φ_a⟩` for tent functions `φ_a`, so that
/// spectral increments map exactly onto tent measurements.
pub fn sine_to_tent(modes: usize, tents: TestSpace) -> Result<DMatrix<f64>> {
    let h = tents
        .fem_spacing()
        .ok_or_else(|| Error::invalid("tent projection needs a fem1d space"))?;
    Ok(DMatrix::from_fn(tents.len(), modes, |a, j| {
        let k = PI * (j + 1) as f64;
        let x = (a + 1) as f64 * h;
        2f64.sqrt() * 2.0 * (k * x).sin() * (1.0 - (k * h).cos()) / (h * k * k)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_addressed_draws_agree() {
        let bulk = standard_normals(7, Purpose::Wiener, 3, 0, 50);
        for m in [0usize, 1, 17, 49] {
            let one = standard_normals(7, Purpose::Wiener, 3, m as u64, 1);
            assert_eq!(one[0].to_bits(), bulk[m].to_bits());
        }
        assert_ne!(bulk, standard_normals(7, Purpose::Wiener, 4, 0, 50));
        assert_ne!(bulk, standard_normals(7, Purpose::WhiteNoise, 3, 0, 50));
    }

    #[test]
    fn white_noise_is_deterministic() {
        let a = sample_white_noise_spectral(32, 11).unwrap();
        let b = sample_white_noise_spectral(32, 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_step_is_rejected() {
        assert!(sample_wiener_increment(NoiseMode::Spectral(4), 0.0, 1, 0).is_err());
    }

    #[test]
    fn aggregation_telescopes() {
        let path = NoisePath::new(5, NoiseMode::Spectral(6), 0.01, 12).unwrap();
        assert_eq!(path.aggregate(1).unwrap(), path);
        let coarse = path.aggregate(4).unwrap();
        assert_eq!(coarse.steps(), 3);
        assert!((coarse.dt() - 0.04).abs() < 1e-15);
        let total = |p: &NoisePath| {
            p.increments().unwrap().iter().fold(vec![0.0; 6], |mut acc, inc| {
                acc.iter_mut().zip(inc).for_each(|(a, b)| *a += b);
                acc
            })
        };
        for (a, b) in total(&path).iter().zip(total(&coarse)) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(path.aggregate(5).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let path = NoisePath::new(9, NoiseMode::Fem(15), 0.125, 8)
            .unwrap()
            .aggregate(2)
            .unwrap();
        let mut buf = Vec::new();
        path.write_binary(&mut buf).unwrap();
        assert_eq!(NoisePath::read_binary(&mut buf.as_slice()).unwrap(), path);
        buf[0] = b'X';
        assert!(NoisePath::read_binary(&mut buf.as_slice()).is_err());
    }

    #[test]
    fn tent_projection_matches_quadrature() {
        let tents = TestSpace::fem_1d(7).unwrap();
        let t = sine_to_tent(5, tents).unwrap();
        let h = 1.0 / 8.0;
        let fine = 80_000;
        for a in [0usize, 3, 6] {
            for j in [0usize, 2, 4] {
                let centre = (a + 1) as f64 * h;
                let q: f64 = (0..fine)
                    .map(|k| {
                        let x = (k as f64 + 0.5) / fine as f64;
                        let tent = (1.0 - (x - centre).abs() / h).max(0.0);
                        2f64.sqrt() * (PI * (j + 1) as f64 * x).sin() * tent
                    })
                    .sum::<f64>()
                    / fine as f64;
                assert!((t[(a, j)] - q).abs() < 1e-8, "{} vs {q}", t[(a, j)]);
            }
        }
    }
}
