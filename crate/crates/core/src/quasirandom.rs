//! Random and quasi-random jitter factors for trajectory lengths.
//!
//! A [`JitterMatrix`] holds one factor `h ∈ (0, 1]` per particle (row) and
//! SMC iteration (column). N-d schemes treat the iteration as the sequence
//! dimension and the particle as the point index. 1-d schemes read a single
//! stream of length `J·K` with stream index `(j − 1)·K + k`. Point indices
//! start at 1 so no low-discrepancy generator ever emits 0.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::Open01;

use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Real;

/// The thirteen jitter schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JitterScheme {
    NoJitter,
    Uniform1d,
    HaltonNd,
    InverseHaltonNd,
    Halton1d,
    PrimesNd,
    InversePrimesNd,
    GoldenRatio1d,
    EquidistantNd,
    OffsetEquidistantNd,
    SobolNd,
    InverseSobolNd,
    Sobol1d,
}

impl JitterScheme {
    pub const ALL: [JitterScheme; 13] = [
        JitterScheme::NoJitter,
        JitterScheme::Uniform1d,
        JitterScheme::HaltonNd,
        JitterScheme::InverseHaltonNd,
        JitterScheme::Halton1d,
        JitterScheme::PrimesNd,
        JitterScheme::InversePrimesNd,
        JitterScheme::GoldenRatio1d,
        JitterScheme::EquidistantNd,
        JitterScheme::OffsetEquidistantNd,
        JitterScheme::SobolNd,
        JitterScheme::InverseSobolNd,
        JitterScheme::Sobol1d,
    ];

    /// Command-line name, e.g. `1d-halton`.
    pub fn name(self) -> &'static str {
        match self {
            JitterScheme::NoJitter => "no-jitter",
            JitterScheme::Uniform1d => "1d-uniform",
            JitterScheme::HaltonNd => "nd-halton",
            JitterScheme::InverseHaltonNd => "nd-inverse-halton",
            JitterScheme::Halton1d => "1d-halton",
            JitterScheme::PrimesNd => "nd-primes",
            JitterScheme::InversePrimesNd => "nd-inverse-primes",
            JitterScheme::GoldenRatio1d => "1d-golden-ratio",
            JitterScheme::EquidistantNd => "nd-equidistant",
            JitterScheme::OffsetEquidistantNd => "nd-offset-equidistant",
            JitterScheme::SobolNd => "nd-sobol",
            JitterScheme::InverseSobolNd => "nd-inverse-sobol",
            JitterScheme::Sobol1d => "1d-sobol",
        }
    }

    /// Human-readable table label.
    pub fn label(self) -> &'static str {
        match self {
            JitterScheme::NoJitter => "No Jitter",
            JitterScheme::Uniform1d => "1-d Uniform",
            JitterScheme::HaltonNd => "N-d Halton",
            JitterScheme::InverseHaltonNd => "N-d Inverse Halton",
            JitterScheme::Halton1d => "1-d Halton",
            JitterScheme::PrimesNd => "N-d Primes",
            JitterScheme::InversePrimesNd => "N-d Inverse Primes",
            JitterScheme::GoldenRatio1d => "1-d Golden Ratio",
            JitterScheme::EquidistantNd => "N-d Equidistant",
            JitterScheme::OffsetEquidistantNd => "N-d Offset Equidistant",
            JitterScheme::SobolNd => "N-d Sobol",
            JitterScheme::InverseSobolNd => "N-d Inverse Sobol",
            JitterScheme::Sobol1d => "1-d Sobol",
        }
    }
}

impl fmt::Display for JitterScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for JitterScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        JitterScheme::ALL
            .into_iter()
            .find(|scheme| scheme.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown jitter scheme `{s}`")))
    }
}

/// `J × K` matrix of jitter factors, rows indexed by particle.
#[derive(Debug, Clone, PartialEq)]
pub struct JitterMatrix<T> {
    values: Vec<T>,
    particles: usize,
    iterations: usize,
    scheme: JitterScheme,
    seed: u64,
}

impl<T: Real> JitterMatrix<T> {
    pub fn particles(&self) -> usize {
        self.particles
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn scheme(&self) -> JitterScheme {
        self.scheme
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Factor for particle `j` at iteration `k` (both zero-based).
    #[inline]
    pub fn get(&self, j: usize, k: usize) -> T {
        self.values[j * self.iterations + k]
    }

    /// All particles' factors at iteration `k` (zero-based).
    pub fn column(&self, k: usize) -> Vec<T> {
        (0..self.particles).map(|j| self.get(j, k)).collect()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }
}

/// Base-`base` digit reversal of `index` about the radix point.
pub fn radical_inverse(index: u64, base: u64) -> Result<f64> {
    if base < 2 {
        return Err(Error::InvalidArgument(format!(
            "radical inverse base must be >= 2, got {base}"
        )));
    }
    if index == 0 {
        return Err(Error::InvalidArgument(
            "radical inverse index must be >= 1".into(),
        ));
    }
    let inv_base = 1.0 / base as f64;
    let mut n = index;
    let mut scale = inv_base;
    let mut value = 0.0;
    while n > 0 {
        value += (n % base) as f64 * scale;
        n /= base;
        scale *= inv_base;
    }
    Ok(value)
}

/// The `k`-th prime, counting 2 as the first.
pub fn nth_prime(k: usize) -> Result<u64> {
    if k == 0 {
        return Err(Error::InvalidArgument("prime index must be >= 1".into()));
    }
    Ok(primes(k)[k - 1])
}

/// The first `count` primes, by a sieve of Eratosthenes sized with the
/// Rosser bound `n (ln n + ln ln n)`.
pub fn primes(count: usize) -> Vec<u64> {
    if count == 0 {
        return Vec::new();
    }
    let n = count as f64;
    let limit = if count < 6 {
        15
    } else {
        (n * (n.ln() + n.ln().ln())).ceil() as usize + 1
    };
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::with_capacity(count);
    for i in 2..=limit {
        if composite[i] {
            continue;
        }
        out.push(i as u64);
        if out.len() == count {
            break;
        }
        let mut m = i * i;
        while m <= limit {
            composite[m] = true;
            m += i;
        }
    }
    out
}

const SOBOL_BITS: usize = 32;
const JOE_KUO_TABLE: &str = include_str!("../data/new-joe-kuo-6.1024");

/// Direction numbers for each Sobol dimension, scaled to 32-bit integers.
#[derive(Debug, Clone)]
pub struct SobolTable {
    directions: Vec<[u32; SOBOL_BITS]>,
}

impl SobolTable {
    /// Parses a Joe–Kuo file: a header line, then `d s a m_1 … m_s` per
    /// line starting at dimension 2. Dimension 1 is implicit (all `m_i = 1`).
    pub fn parse(text: &str) -> Result<Self> {
        let mut directions = vec![[0u32; SOBOL_BITS]];
        for (i, slot) in directions[0].iter_mut().enumerate() {
            *slot = 1u32 << (SOBOL_BITS - 1 - i);
        }
        let bad = |line: usize, message: String| Error::Format {
            path: "joe-kuo direction numbers".into(),
            line,
            message,
        };
        for (lineno, line) in text.lines().enumerate().skip(1) {
            let fields: Vec<u64> = line
                .split_whitespace()
                .map(|f| f.parse::<u64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(lineno + 1, e.to_string()))?;
            if fields.is_empty() {
                continue;
            }
            if fields.len() < 3 {
                return Err(bad(lineno + 1, "expected `d s a m_1 .. m_s`".into()));
            }
            let (dim, degree, coeff) = (fields[0] as usize, fields[1] as usize, fields[2]);
            let m = &fields[3..];
            if dim != directions.len() + 1 || degree == 0 || m.len() != degree {
                return Err(bad(lineno + 1, format!("malformed entry for dimension {dim}")));
            }
            let mut v = [0u32; SOBOL_BITS];
            for i in 0..SOBOL_BITS {
                if i < degree {
                    v[i] = (m[i] as u32) << (SOBOL_BITS - 1 - i);
                } else {
                    let mut x = v[i - degree] ^ (v[i - degree] >> degree);
                    for k in 1..degree {
                        if (coeff >> (degree - 1 - k)) & 1 == 1 {
                            x ^= v[i - k];
                        }
                    }
                    v[i] = x;
                }
            }
            directions.push(v);
        }
        Ok(SobolTable { directions })
    }

    /// The bundled table (dimensions 1 through 1024).
    pub fn bundled() -> &'static SobolTable {
        static TABLE: OnceLock<SobolTable> = OnceLock::new();
        TABLE.get_or_init(|| SobolTable::parse(JOE_KUO_TABLE).expect("bundled table parses"))
    }

    pub fn dimensions(&self) -> usize {
        self.directions.len()
    }

    /// Sobol point `index` (Gray-code order, `index ≥ 1`) in dimension
    /// `dimension` (one-based).
    pub fn point(&self, index: u64, dimension: usize) -> Result<f64> {
        if index == 0 {
            return Err(Error::InvalidArgument("Sobol index must be >= 1".into()));
        }
        if index >= 1u64 << SOBOL_BITS {
            return Err(Error::InvalidArgument(format!(
                "Sobol index {index} exceeds 2^{SOBOL_BITS}"
            )));
        }
        if dimension == 0 || dimension > self.directions.len() {
            return Err(Error::UnsupportedDimension {
                requested: dimension,
                available: self.directions.len(),
            });
        }
        let v = &self.directions[dimension - 1];
        let mut gray = index ^ (index >> 1);
        let mut x = 0u32;
        let mut bit = 0;
        while gray > 0 {
            if gray & 1 == 1 {
                x ^= v[bit];
            }
            gray >>= 1;
            bit += 1;
        }
        Ok(x as f64 / (1u64 << SOBOL_BITS) as f64)
    }
}

/// Sobol point from the bundled Joe–Kuo table.
pub fn sobol_point(index: u64, dimension: usize) -> Result<f64> {
    SobolTable::bundled().point(index, dimension)
}

/// Builds the jitter matrix for `scheme` with `particles` rows and
/// `iterations` columns. Only the uniform and (offset) equidistant schemes
/// consume `seed`.
pub fn generate_jitter<T: Real>(
    scheme: JitterScheme,
    particles: usize,
    iterations: usize,
    seed: u64,
) -> Result<JitterMatrix<T>> {
    if particles == 0 || iterations == 0 {
        return Err(Error::InvalidArgument(
            "jitter matrix needs at least one particle and one iteration".into(),
        ));
    }
    let (jn, kn) = (particles, iterations);
    let mut values = vec![0.0f64; jn * kn];
    // stream index for 1-d schemes, one-based
    let stream = |j: usize, k: usize| (j * kn + k + 1) as u64;

    match scheme {
        JitterScheme::NoJitter => values.fill(1.0),
        JitterScheme::Uniform1d => {
            let mut rng = rng::seeded(seed);
            for v in values.iter_mut() {
                *v = rng.sample(Open01);
            }
        }
        JitterScheme::HaltonNd | JitterScheme::InverseHaltonNd => {
            let bases = primes(kn);
            for j in 0..jn {
                for k in 0..kn {
                    values[j * kn + k] = radical_inverse(j as u64 + 1, bases[k])?;
                }
            }
        }
        JitterScheme::Halton1d => {
            for j in 0..jn {
                for k in 0..kn {
                    values[j * kn + k] = radical_inverse(stream(j, k), 2)?;
                }
            }
        }
        JitterScheme::PrimesNd | JitterScheme::InversePrimesNd => {
            let roots: Vec<f64> = primes(kn).into_iter().map(|p| (p as f64).sqrt()).collect();
            for j in 0..jn {
                for k in 0..kn {
                    values[j * kn + k] = ((j + 1) as f64 * roots[k]).fract();
                }
            }
        }
        JitterScheme::GoldenRatio1d => {
            let ratio = (5f64.sqrt() - 1.0) / 2.0;
            for j in 0..jn {
                for k in 0..kn {
                    values[j * kn + k] = (stream(j, k) as f64 * ratio).fract();
                }
            }
        }
        JitterScheme::EquidistantNd | JitterScheme::OffsetEquidistantNd => {
            let mut rng = rng::seeded(seed);
            let base: Vec<f64> = (1..=jn).map(|j| j as f64 / jn as f64).collect();
            for k in 0..kn {
                let mut column = base.clone();
                column.shuffle(&mut rng);
                for (j, h) in column.into_iter().enumerate() {
                    values[j * kn + k] = h;
                }
            }
            if scheme == JitterScheme::OffsetEquidistantNd {
                for v in values.iter_mut() {
                    let shifted = *v + 0.1 * rng.random::<f64>();
                    *v = if shifted > 1.0 { shifted - 1.0 } else { shifted };
                }
            }
        }
        JitterScheme::SobolNd | JitterScheme::InverseSobolNd => {
            let table = SobolTable::bundled();
            for j in 0..jn {
                for k in 0..kn {
                    values[j * kn + k] = table.point(j as u64 + 1, k + 1)?;
                }
            }
        }
        JitterScheme::Sobol1d => {
            let table = SobolTable::bundled();
            for j in 0..jn {
                for k in 0..kn {
                    values[j * kn + k] = table.point(stream(j, k), 1)?;
                }
            }
        }
    }

    if matches!(
        scheme,
        JitterScheme::InverseHaltonNd | JitterScheme::InversePrimesNd | JitterScheme::InverseSobolNd
    ) {
        for row in values.chunks_mut(kn) {
            row.reverse();
        }
    }

    debug_assert!(values.iter().all(|&v| v > 0.0 && v <= 1.0));
    Ok(JitterMatrix {
        values: values.into_iter().map(T::lit).collect(),
        particles,
        iterations,
        scheme,
        seed,
    })
}
