//! Seeded randomness.
//!
//! Every random draw in the crate comes from ChaCha8 (a counter-based generator).
//! Independent sub-streams are obtained by [`stream_rng`], which keeps the
//! 64-bit seed and selects the ChaCha stream id, so results never depend on
//! how work is split across threads.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::{ComplexMatrix, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Generator for sub-stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// SplitMix64 finaliser; used to derive per-task seeds from a master seed.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic seed for task `index` within the experiment component `label`.
pub fn derive_seed(master: u64, label: u64, index: u64) -> u64 {
    mix64(mix64(master ^ mix64(label)) ^ index)
}

/// Stable 64-bit label for a name (FNV-1a), for use with [`derive_seed`].
pub fn label(name: &str) -> u64 {
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Complex normal with E|z|² = 1.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// (A + A†)/2 with A filled by complex normals.
pub fn gaussian_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let a = ComplexMatrix::from_fn(dim, |_, _| complex_gaussian(rng));
    a.hermitian_part()
}

/// Real symmetric Gaussian matrix (orthogonal ensemble normalisation).
pub fn gaussian_real_symmetric<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let a = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.sample(StandardNormal));
    (&a + a.transpose()) * 0.5
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the phases of
/// diag(R) moved into Q.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let z = DMatrix::<C64>::from_fn(dim, dim, |_, _| complex_gaussian(rng));
    let qr = z.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    ComplexMatrix::new(q).expect("square by construction")
}
