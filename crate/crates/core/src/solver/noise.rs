use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::torus::{Field, TorusDomain};

const BAND: i32 = 4;

/// Smooth random field made of Fourier modes with `|kx|, |ky| ≤ 4`,
/// scaled so that its sup-norm equals `amplitude`. Reproducible from
/// `(seed, stream)`.
pub fn band_limited_noise(domain: &TorusDomain, amplitude: f64, seed: u64, stream: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut modes = Vec::new();
    for kx in 0..=BAND {
        for ky in -BAND..=BAND {
            if kx == 0 && ky <= 0 {
                continue;
            }
            let c: f64 = rng.gen_range(-1.0..1.0);
            let s: f64 = rng.gen_range(-1.0..1.0);
            modes.push((kx, ky, c, s));
        }
    }
    let (lx, ly) = (domain.lx(), domain.ly());
    let f = domain.sample(|x, y| {
        modes
            .iter()
            .map(|&(kx, ky, c, s)| {
                let th = 2.0 * PI * (kx as f64 * x / lx + ky as f64 * y / ly);
                c * th.cos() + s * th.sin()
            })
            .sum()
    });
    let m = f.max_abs();
    if m == 0.0 {
        return f;
    }
    f.map(|x| amplitude * x / m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproducible_and_normalised() {
        let d = TorusDomain::square(1.0, 32).unwrap();
        let a = band_limited_noise(&d, 1.0, 7, 2);
        let b = band_limited_noise(&d, 1.0, 7, 2);
        let c = band_limited_noise(&d, 1.0, 7, 3);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((a.max_abs() - 1.0).abs() < 1e-15);
    }
}
