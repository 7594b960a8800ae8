//! Problem instance generation: Gaussian designs, sparse signals, corruption
//! vectors, dense noise, and their assembly into `y = X w* + zeta + d`.
//!
//! All sampling goes through a counter-based generator keyed by a `u64`
//! seed, so instances are bit-identical across platforms and across parallel
//! trials. Normal draws use Box–Muller on that stream.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::analytics::{eta0, Fraction};
use crate::numerics::{
    read_vector_csv, sort_by_abs_desc, write_matrix_csv, write_vector_csv, DenseMatrix,
    NumericsError, Vector,
};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("sparsity {k} out of range for dimension {n}")]
    SparsityTooLarge { k: usize, n: usize },
    #[error("amplitude must be positive and finite, got {0}")]
    BadAmplitude(f64),
    #[error("epsilon {0} outside the dense adversary's range (0, 0.2)")]
    EpsilonOutOfRange(f64),
    #[error("assembled problem violates its invariants: {0}")]
    InvariantViolation(String),
    #[error("manifest field {0} missing or malformed")]
    BadManifest(String),
}

/// Stateless mix of `(key, counter)`; the splitmix64 finalizer applied to a
/// golden-ratio stride.
fn mix(key: u64, counter: u64) -> u64 {
    let mut z = key ^ counter.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from a base seed and a stream label.
pub fn derive_seed(base: u64, label: &str) -> u64 {
    // FNV-1a over the label folded into the counter mix
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    mix(base, h)
}

/// Counter-based random generator: the stream is a pure function of
/// `(seed, counter)`, so replaying a seed replays the stream exactly.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
    cached_normal: Option<f64>,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix(seed, 0x6A09_E667_F3BC_C909),
            counter: 0,
            cached_normal: None,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let v = mix(self.key, self.counter);
        self.counter += 1;
        v
    }

    /// Uniform draw in the open interval (0, 1].
    pub fn next_uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) + 1) as f64 / (1u64 << 53) as f64
    }

    /// Standard normal draw via Box–Muller; pairs are cached.
    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.cached_normal.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.cached_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Uniform index below `bound`.
    pub fn next_index(&mut self, bound: usize) -> usize {
        debug_assert!(bound > 0);
        (self.next_u64() % bound as u64) as usize
    }

    /// Random sign, +1 or -1.
    pub fn next_sign(&mut self) -> f64 {
        if self.next_u64() & 1 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// The first `k` elements of a random permutation of `0..n`.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k.min(n) {
            let j = i + self.next_index(n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}

/// An `m x n` design with i.i.d. standard normal entries.
pub fn sample_gaussian_design(m: usize, n: usize, seed: u64) -> DenseMatrix {
    let mut rng = CounterRng::new(seed);
    let data: Vec<f64> = (0..m * n).map(|_| rng.next_normal()).collect();
    DenseMatrix::new(m, n, data).expect("normal draws are finite")
}

/// A `k`-sparse signal with uniformly chosen support and entries of
/// magnitude `amplitude` with random signs, so `||w*||_1 = k * amplitude`.
pub fn sample_sparse_signal(
    n: usize,
    k: usize,
    amplitude: f64,
    seed: u64,
) -> Result<Vector, ProblemError> {
    if k > n || k == 0 {
        return Err(ProblemError::SparsityTooLarge { k, n });
    }
    if !(amplitude.is_finite() && amplitude > 0.0) {
        return Err(ProblemError::BadAmplitude(amplitude));
    }
    let mut rng = CounterRng::new(seed);
    let support = rng.sample_indices(n, k);
    let mut w = vec![0.0; n];
    for idx in support {
        w[idx] = amplitude * rng.next_sign();
    }
    Ok(Vector::from(w))
}

/// The worst-case sparse adversary: zeroes the responses carrying the
/// `floor(eta * m)` largest magnitudes of `X w*` by setting
/// `zeta = -(X w*)` there. Ties break toward the lower index.
pub fn corrupt_topk_zeroing(
    x: &DenseMatrix,
    w_star: &Vector,
    eta: Fraction,
) -> Result<(Vector, Vec<usize>), ProblemError> {
    let responses = x.matvec(w_star)?;
    let budget = eta.budget(x.rows());
    let order = sort_by_abs_desc(responses.as_slice());
    let mut indices: Vec<usize> = order[..budget].to_vec();
    indices.sort_unstable();
    let mut zeta = vec![0.0; x.rows()];
    for &i in &indices {
        zeta[i] = -responses[i];
    }
    Ok((Vector::from(zeta), indices))
}

/// The dense-noise adversary: cancels `X w*` on the smallest-magnitude
/// entries so that more than a `(1 - eta0)` fraction of the responses become
/// exactly zero, which drags the L1 estimate to the origin. The support size
/// is `floor((1 - eta0 + epsilon/2) * m)` for `0 < epsilon < 0.2`.
pub fn adversarial_dense_noise(
    x: &DenseMatrix,
    w_star: &Vector,
    epsilon: Fraction,
) -> Result<Vector, ProblemError> {
    let eps = epsilon.value();
    if eps <= 0.0 || eps >= 0.2 {
        return Err(ProblemError::EpsilonOutOfRange(eps));
    }
    let responses = x.matvec(w_star)?;
    let m = x.rows();
    let keep = Fraction::new(1.0 - eta0().value() + 0.5 * eps)
        .expect("interior for epsilon < 0.2")
        .budget(m);
    let order = sort_by_abs_desc(responses.as_slice());
    // the smallest |.| entries sit at the back of the descending order
    let mut d = vec![0.0; m];
    for &i in &order[m - keep..] {
        d[i] = -responses[i];
    }
    Ok(Vector::from(d))
}

/// Baseline non-adversarial corruption: `floor(eta * m)` uniformly chosen
/// responses shifted by `+-magnitude`.
pub fn random_corruption(
    m: usize,
    eta: Fraction,
    magnitude: f64,
    seed: u64,
) -> Result<(Vector, Vec<usize>), ProblemError> {
    if !magnitude.is_finite() {
        return Err(ProblemError::BadAmplitude(magnitude));
    }
    let mut rng = CounterRng::new(seed);
    let budget = eta.budget(m);
    let mut indices = rng.sample_indices(m, budget);
    indices.sort_unstable();
    let mut zeta = vec![0.0; m];
    for &i in &indices {
        zeta[i] = magnitude * rng.next_sign();
    }
    Ok((Vector::from(zeta), indices))
}

/// Which corruption the adversary applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorruptionKind {
    None,
    /// Zero out the largest `eta m` responses (the sharp adversary).
    TopkZeroing,
    /// Random-location `+-magnitude` corruption.
    RandomSign { magnitude: f64 },
    /// The dense-noise adversary with slack `epsilon`.
    DenseAdversary { epsilon: Fraction },
}

impl CorruptionKind {
    pub fn name(&self) -> &'static str {
        match self {
            CorruptionKind::None => "none",
            CorruptionKind::TopkZeroing => "topk_zeroing",
            CorruptionKind::RandomSign { .. } => "random_sign",
            CorruptionKind::DenseAdversary { .. } => "dense_adversary",
        }
    }
}

/// Corruption plan: the fraction touched and the mechanism.
#[derive(Debug, Clone, Copy)]
pub struct CorruptionSpec {
    pub eta: Fraction,
    pub kind: CorruptionKind,
}

/// A fully assembled observation instance. The identity
/// `y = X w* + zeta + d` is re-verified on construction and on reload.
#[derive(Debug, Clone)]
pub struct Problem {
    pub x: DenseMatrix,
    pub w_star: Vector,
    pub zeta: Vector,
    pub d: Vector,
    pub y: Vector,
    pub corrupted_indices: Vec<usize>,
    pub seed: u64,
    pub adversary_name: String,
}

impl Problem {
    pub fn m(&self) -> usize {
        self.x.rows()
    }

    pub fn n(&self) -> usize {
        self.x.cols()
    }

    fn verify(&self) -> Result<(), ProblemError> {
        let m = self.m();
        for (name, v) in [("zeta", &self.zeta), ("d", &self.d), ("y", &self.y)] {
            if v.len() != m {
                return Err(ProblemError::InvariantViolation(format!(
                    "{name} has length {} but m = {m}",
                    v.len()
                )));
            }
        }
        let xw = self.x.matvec(&self.w_star)?;
        for i in 0..m {
            if self.y[i] != xw[i] + self.zeta[i] + self.d[i] {
                return Err(ProblemError::InvariantViolation(format!(
                    "reconstruction identity fails at row {i}"
                )));
            }
        }
        if self.corrupted_indices.len() != self.zeta.norm0() {
            return Err(ProblemError::InvariantViolation(
                "corrupted index count disagrees with ||zeta||_0".into(),
            ));
        }
        let mut inside = vec![false; m];
        for &i in &self.corrupted_indices {
            inside[i] = true;
        }
        if (0..m).any(|i| self.zeta[i] != 0.0 && !inside[i]) {
            return Err(ProblemError::InvariantViolation(
                "zeta is nonzero outside the corrupted index set".into(),
            ));
        }
        Ok(())
    }

    /// Writes `X.csv`, `wstar.csv`, `y.csv`, `zeta.csv`, `d.csv` and a
    /// `manifest.txt` of `key=value` lines into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<(), ProblemError> {
        std::fs::create_dir_all(dir).map_err(|source| NumericsError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        write_matrix_csv(&dir.join("X.csv"), &self.x)?;
        write_vector_csv(&dir.join("wstar.csv"), &self.w_star)?;
        write_vector_csv(&dir.join("y.csv"), &self.y)?;
        write_vector_csv(&dir.join("zeta.csv"), &self.zeta)?;
        write_vector_csv(&dir.join("d.csv"), &self.d)?;
        let mut manifest = String::new();
        let _ = writeln!(manifest, "m={}", self.m());
        let _ = writeln!(manifest, "n={}", self.n());
        let _ = writeln!(manifest, "k={}", self.w_star.norm0());
        let eta = self.corrupted_indices.len() as f64 / self.m().max(1) as f64;
        let _ = writeln!(manifest, "eta={}", crate::numerics::fmt_full(eta));
        let _ = writeln!(manifest, "adversary={}", self.adversary_name);
        let _ = writeln!(manifest, "seed={}", self.seed);
        std::fs::write(dir.join("manifest.txt"), manifest).map_err(|source| {
            ProblemError::Numerics(NumericsError::Io {
                path: dir.join("manifest.txt").display().to_string(),
                source,
            })
        })
    }

    /// Reads a problem back from [`Problem::write_dir`] output and re-checks
    /// the invariants.
    pub fn read_dir(dir: &Path) -> Result<Problem, ProblemError> {
        let x = crate::numerics::read_matrix_csv(&dir.join("X.csv"))?;
        let w_star = read_vector_csv(&dir.join("wstar.csv"))?;
        let y = read_vector_csv(&dir.join("y.csv"))?;
        let zeta = read_vector_csv(&dir.join("zeta.csv"))?;
        let d = read_vector_csv(&dir.join("d.csv"))?;
        let manifest_path = dir.join("manifest.txt");
        let text =
            std::fs::read_to_string(&manifest_path).map_err(|source| NumericsError::Io {
                path: manifest_path.display().to_string(),
                source,
            })?;
        let mut adversary_name = String::from("unknown");
        let mut seed = 0u64;
        for line in text.lines() {
            if let Some((k, v)) = line.split_once('=') {
                match k.trim() {
                    "adversary" => adversary_name = v.trim().to_string(),
                    "seed" => {
                        seed = v
                            .trim()
                            .parse()
                            .map_err(|_| ProblemError::BadManifest("seed".into()))?;
                    }
                    _ => {}
                }
            }
        }
        let corrupted_indices: Vec<usize> = (0..zeta.len()).filter(|&i| zeta[i] != 0.0).collect();
        let problem = Problem {
            x,
            w_star,
            zeta,
            d,
            y,
            corrupted_indices,
            seed,
            adversary_name,
        };
        problem.verify()?;
        Ok(problem)
    }
}

/// Builds a [`Problem`] from a design, signal, corruption plan, and optional
/// dense noise. `y` is computed exactly as `X w* + zeta + d` and the
/// invariants are checked before the instance is returned.
pub fn assemble_problem(
    x: DenseMatrix,
    w_star: Vector,
    spec: CorruptionSpec,
    dense_noise: Option<Vector>,
    seed: u64,
) -> Result<Problem, ProblemError> {
    let m = x.rows();
    if w_star.len() != x.cols() {
        return Err(ProblemError::Numerics(NumericsError::DimensionMismatch {
            context: "signal length versus design columns",
            expected: x.cols(),
            got: w_star.len(),
        }));
    }
    if let Some(d) = &dense_noise {
        if d.len() != m {
            return Err(ProblemError::Numerics(NumericsError::DimensionMismatch {
                context: "dense noise length versus rows",
                expected: m,
                got: d.len(),
            }));
        }
    }
    let (zeta, corrupted_indices, adversary_d) = match spec.kind {
        CorruptionKind::None => (Vector::zeros(m), Vec::new(), None),
        CorruptionKind::TopkZeroing => {
            let (zeta, idx) = corrupt_topk_zeroing(&x, &w_star, spec.eta)?;
            (zeta, idx, None)
        }
        CorruptionKind::RandomSign { magnitude } => {
            let (zeta, idx) =
                random_corruption(m, spec.eta, magnitude, derive_seed(seed, "corruption"))?;
            (zeta, idx, None)
        }
        CorruptionKind::DenseAdversary { epsilon } => {
            let d = adversarial_dense_noise(&x, &w_star, epsilon)?;
            (Vector::zeros(m), Vec::new(), Some(d))
        }
    };
    let mut d_total = dense_noise.unwrap_or_else(|| Vector::zeros(m));
    if let Some(da) = adversary_d {
        for i in 0..m {
            d_total[i] += da[i];
        }
    }
    let xw = x.matvec(&w_star)?;
    let y: Vec<f64> = (0..m).map(|i| xw[i] + zeta[i] + d_total[i]).collect();
    let problem = Problem {
        x,
        w_star,
        zeta,
        d: d_total,
        y: Vector::from(y),
        corrupted_indices,
        seed,
        adversary_name: spec.kind.name().to_string(),
    };
    problem.verify()?;
    Ok(problem)
}
