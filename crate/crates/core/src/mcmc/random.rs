//! Primitive random variate generators used by both samplers.
//!
//! Gamma is parameterized by shape and *rate*; inverse-gamma by shape and
//! scale, so that `1 / InvGamma(a, b) ~ Gamma(a, rate = b)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};

/// Random stream type used throughout the crate.
pub type SamplerRng = ChaCha8Rng;

/// Root stream for a seed.
pub fn rng_from_seed(seed: u64) -> SamplerRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent sub-stream `stream` of the root seed. Sub-streams do not depend
/// on the order in which they are created.
pub fn substream(seed: u64, stream: u64) -> SamplerRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_positive(name: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must be finite and positive, got {value}")))
    }
}

pub fn draw_std_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Inverse Gaussian draw by the Michael–Schucany–Haas transformation.
pub fn draw_inverse_gaussian<R: Rng + ?Sized>(mean: f64, shape: f64, rng: &mut R) -> Result<f64> {
    check_positive("inverse Gaussian mean", mean)?;
    check_positive("inverse Gaussian shape", shape)?;

    let v = draw_std_normal(rng);
    let y = mean * v * v;
    // Smaller root of the quadratic, written without the cancellation in
    // `mean + mean/(2 shape) * (y - sqrt(4 shape y + y^2))` for large y.
    let x = if y > 0.0 {
        let root = (y * y + 4.0 * shape * y).sqrt();
        let denom = y + root;
        4.0 * shape * mean * y / (denom * denom)
    } else {
        mean
    };
    let x = x.max(f64::MIN_POSITIVE);
    let u: f64 = rng.random();
    if u <= mean / (mean + x) {
        Ok(x)
    } else {
        Ok(mean * mean / x)
    }
}

/// Gamma draw with density proportional to `x^(shape-1) exp(-rate x)`.
pub fn draw_gamma<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    check_positive("gamma shape", shape)?;
    check_positive("gamma rate", rate)?;
    let dist = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::Domain(e.to_string()))?;
    // Underflow to zero is possible for tiny shapes; the support is open.
    Ok(dist.sample(rng).max(f64::MIN_POSITIVE))
}

/// Inverse-gamma draw with density proportional to `x^(-shape-1) exp(-scale / x)`.
pub fn draw_inverse_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    check_positive("inverse-gamma shape", shape)?;
    check_positive("inverse-gamma scale", scale)?;
    let g = draw_gamma(shape, scale, rng)?;
    Ok(1.0 / g)
}

/// Multivariate normal draw `mean + L z` with `L L^T = cov`.
pub fn draw_mvn<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    cov: &DMatrix<f64>,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let d = mean.len();
    if cov.nrows() != d || cov.ncols() != d {
        return Err(Error::Dimension(format!(
            "mean has length {d} but covariance is {}x{}",
            cov.nrows(),
            cov.ncols()
        )));
    }
    let chol = cov
        .clone()
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("multivariate normal covariance".into()))?;
    let z = DVector::from_fn(d, |_, _| draw_std_normal(rng));
    Ok(mean + chol.l() * z)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn inverse_gaussian_moments() {
        let mut rng = rng_from_seed(11);
        let xs: Vec<f64> = (0..1_000_000)
            .map(|_| draw_inverse_gaussian(2.0, 8.0, &mut rng).unwrap())
            .collect();
        let (m, v) = mean_var(&xs);
        assert!((m - 2.0).abs() / 2.0 < 0.01, "mean {m}");
        // mean^3 / shape = 1
        assert!((v - 1.0).abs() < 0.02, "variance {v}");
    }

    #[test]
    fn inverse_gaussian_support_and_extremes() {
        let mut rng = rng_from_seed(3);
        for &(mu, shape) in &[(1e-6, 1e-6), (1e6, 1e-3), (1e6, 1e6), (0.3, 50.0), (1.0, 1.0)] {
            for _ in 0..2000 {
                let x = draw_inverse_gaussian(mu, shape, &mut rng).unwrap();
                assert!(x > 0.0 && x.is_finite(), "mu={mu} shape={shape} x={x}");
            }
        }
    }

    #[test]
    fn inverse_gaussian_rejects_bad_parameters() {
        let mut rng = rng_from_seed(0);
        assert!(draw_inverse_gaussian(0.0, 1.0, &mut rng).is_err());
        assert!(draw_inverse_gaussian(1.0, -1.0, &mut rng).is_err());
        assert!(draw_inverse_gaussian(f64::NAN, 1.0, &mut rng).is_err());
    }

    #[test]
    fn gamma_mean_uses_rate() {
        let mut rng = rng_from_seed(5);
        let xs: Vec<f64> = (0..1_000_000).map(|_| draw_gamma(51.0, 2.0, &mut rng).unwrap()).collect();
        let (m, _) = mean_var(&xs);
        assert!((m - 25.5).abs() / 25.5 < 0.01, "mean {m}");
    }

    #[test]
    fn gamma_shape_one_is_exponential() {
        let mut rng = rng_from_seed(6);
        let rate = 3.0;
        let xs: Vec<f64> = (0..200_000).map(|_| draw_gamma(1.0, rate, &mut rng).unwrap()).collect();
        let (m, v) = mean_var(&xs);
        assert!((m - 1.0 / rate).abs() < 0.01 / rate * 3.0);
        assert!((v - 1.0 / (rate * rate)).abs() < 0.03 / (rate * rate));
        // P(X > 1/rate) = e^-1
        let tail = xs.iter().filter(|&&x| x > 1.0 / rate).count() as f64 / xs.len() as f64;
        assert!((tail - (-1.0f64).exp()).abs() < 0.005);
    }

    #[test]
    fn inverse_gamma_reciprocal_is_exponential() {
        let mut rng = rng_from_seed(7);
        let recips: Vec<f64> = (0..1_000_000)
            .map(|_| 1.0 / draw_inverse_gamma(1.0, 1.0, &mut rng).unwrap())
            .collect();
        let (m, _) = mean_var(&recips);
        assert!((m - 1.0).abs() < 0.01, "mean {m}");
    }

    #[test]
    fn gamma_domain_errors() {
        let mut rng = rng_from_seed(0);
        assert!(draw_gamma(0.0, 1.0, &mut rng).is_err());
        assert!(draw_gamma(1.0, 0.0, &mut rng).is_err());
        assert!(draw_inverse_gamma(-1.0, 1.0, &mut rng).is_err());
        assert!(draw_inverse_gamma(1.0, f64::INFINITY, &mut rng).is_err());
    }

    #[test]
    fn mvn_identity_and_diagonal() {
        let mut rng = rng_from_seed(8);
        let mean = DVector::zeros(2);
        let cov = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let draws: Vec<DVector<f64>> = (0..1_000_000).map(|_| draw_mvn(&mean, &cov, &mut rng).unwrap()).collect();
        let a: Vec<f64> = draws.iter().map(|d| d[0]).collect();
        let b: Vec<f64> = draws.iter().map(|d| d[1]).collect();
        let (_, va) = mean_var(&a);
        let (_, vb) = mean_var(&b);
        assert!((va - 1.0).abs() < 0.01, "var {va}");
        assert!((vb.sqrt() - 2.0).abs() / 2.0 < 0.01, "sd {}", vb.sqrt());
    }

    #[test]
    fn mvn_is_reproducible_and_checks_pd() {
        let mean = DVector::from_vec(vec![1.0, -1.0, 0.5]);
        let cov = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 1.5]);
        let a = draw_mvn(&mean, &cov, &mut rng_from_seed(42)).unwrap();
        let b = draw_mvn(&mean, &cov, &mut rng_from_seed(42)).unwrap();
        assert_eq!(a, b);

        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(
            draw_mvn(&DVector::zeros(2), &bad, &mut rng_from_seed(0)),
            Err(Error::NotPositiveDefinite(_))
        ));
    }

    #[test]
    fn substreams_are_order_independent() {
        let mut a = substream(9, 4);
        let _ = substream(9, 3);
        let mut b = substream(9, 4);
        let x: f64 = a.random();
        let y: f64 = b.random();
        assert_eq!(x, y);
        let mut c = substream(9, 5);
        let z: f64 = c.random();
        assert_ne!(x, z);
    }
}
