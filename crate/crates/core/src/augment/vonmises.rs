//! von Mises distribution on directions in degrees: exponentially scaled
//! Bessel functions, concentration estimation from the mean resultant length,
//! Best–Fisher rejection sampling and a mixture fitted by EM.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::random::{self, Rng};
use crate::scalar::Scalar;
use crate::schema::wrap_degrees;
use crate::stats::log_sum_exp;

/// Upper bound on fitted concentrations; a sample of identical angles maps here.
pub const KAPPA_MAX: f64 = 1.0e4;

const SERIES_LIMIT: f64 = 30.0;

/// `I_nu(x) * exp(-x)` for `nu` in {0, 1} and `x >= 0`.
fn bessel_scaled<T: Scalar>(nu: u32, x: T) -> T {
    let x = x.abs();
    if x.f64() <= SERIES_LIMIT {
        let half = x / T::of(2.0);
        let q = half * half;
        let mut term = if nu == 0 { T::one() } else { half };
        let mut sum = term;
        let nu_t = T::of(nu as f64);
        for k in 1..500 {
            let k_t = T::of_usize(k);
            term = term * q / (k_t * (k_t + nu_t));
            sum = sum + term;
            if term <= sum * T::epsilon() {
                break;
            }
        }
        sum * (-x).exp()
    } else {
        // Hankel asymptotic expansion; terms shrink until k ~ 2x, far beyond what is needed here.
        let mu = T::of(4.0 * (nu * nu) as f64);
        let eight_x = T::of(8.0) * x;
        let mut term = T::one();
        let mut sum = T::one();
        for k in 1..60 {
            let odd = T::of((2 * k - 1) as f64);
            let next = -term * (mu - odd * odd) / (T::of_usize(k) * eight_x);
            if next.abs() >= term.abs() {
                break;
            }
            term = next;
            sum = sum + term;
            if term.abs() <= sum.abs() * T::epsilon() {
                break;
            }
        }
        sum / (T::of(2.0) * T::PI() * x).sqrt()
    }
}

pub fn bessel_i0e<T: Scalar>(x: T) -> T {
    bessel_scaled(0, x)
}

pub fn bessel_i1e<T: Scalar>(x: T) -> T {
    bessel_scaled(1, x)
}

/// ln I0(kappa), stable for large kappa.
pub fn log_bessel_i0<T: Scalar>(kappa: T) -> T {
    bessel_i0e(kappa).ln() + kappa.abs()
}

/// Mean resultant length of a von Mises(kappa): `A(kappa) = I1(kappa) / I0(kappa)`.
pub fn bessel_ratio<T: Scalar>(kappa: T) -> T {
    if kappa <= T::zero() {
        return T::zero();
    }
    bessel_i1e(kappa) / bessel_i0e(kappa)
}

/// Solves `A(kappa) = r` on `[0, KAPPA_MAX]` by safeguarded Newton iteration.
pub fn estimate_kappa<T: Scalar>(r: T) -> T {
    let kmax = T::of(KAPPA_MAX);
    if !(r > T::zero()) {
        return T::zero();
    }
    if r >= bessel_ratio(kmax) {
        return kmax;
    }
    let tol = T::of(1e-8).max(T::epsilon() * T::of(16.0));
    let (mut lo, mut hi) = (T::zero(), kmax);
    // Best & Fisher's closed-form approximation as the starting point
    let (r64, two) = (r.f64(), T::of(2.0));
    let start = if r64 < 0.53 {
        2.0 * r64 + r64.powi(3) + 5.0 * r64.powi(5) / 6.0
    } else if r64 < 0.85 {
        -0.4 + 1.39 * r64 + 0.43 / (1.0 - r64)
    } else {
        1.0 / (r64.powi(3) - 4.0 * r64 * r64 + 3.0 * r64)
    };
    let mut k = T::of(start).max(T::zero()).min(kmax);
    for _ in 0..200 {
        let a = bessel_ratio(k);
        let f = a - r;
        if f > T::zero() {
            hi = k;
        } else {
            lo = k;
        }
        let deriv = if k > T::zero() {
            T::one() - a / k - a * a
        } else {
            T::of(0.5)
        };
        let mut next = k - f / deriv;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = (lo + hi) / two;
        }
        let step = (next - k).abs();
        k = next;
        if step <= tol * k.max(T::one()) || hi - lo <= tol * k.max(T::one()) {
            break;
        }
    }
    k
}

/// Draws `n` angles in `[0, 360)` from von Mises(mu, kappa) with the
/// Best–Fisher wrapped-Cauchy envelope; `kappa = 0` is the uniform circle.
pub fn sample_von_mises<T: Scalar>(mu_deg: T, kappa: T, n: usize, seed: u64) -> Result<Vec<T>> {
    if !(kappa >= T::zero()) || !kappa.is_finite() {
        return Err(Error::Parameter(format!(
            "kappa = {kappa} must be finite and >= 0"
        )));
    }
    let mut rng = random::rng(seed);
    Ok((0..n)
        .map(|_| draw_von_mises(mu_deg, kappa, &mut rng))
        .collect())
}

pub(crate) fn draw_von_mises<T: Scalar>(mu_deg: T, kappa: T, rng: &mut Rng) -> T {
    use std::f64::consts::PI;
    let kappa = kappa.f64();
    if kappa < 1e-8 {
        return wrap_degrees(T::of(rng.random::<f64>() * 360.0));
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let u3: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let theta = f.clamp(-1.0, 1.0).acos();
            let theta = if u3 > 0.5 { theta } else { -theta };
            return wrap_degrees(mu_deg + T::of(theta.to_degrees()));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct VonMisesComponent<T> {
    /// Mean direction in degrees, `[0, 360)`.
    pub mu: T,
    pub kappa: T,
    pub weight: T,
}

impl<T: Scalar> VonMisesComponent<T> {
    pub fn log_density(&self, angle_deg: T) -> T {
        let d = (angle_deg - self.mu).to_radians();
        self.kappa * d.cos() - (T::of(2.0) * T::PI()).ln() - log_bessel_i0(self.kappa)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct VonMisesMixture<T> {
    pub components: Vec<VonMisesComponent<T>>,
}

impl<T: Scalar> VonMisesMixture<T> {
    /// Mixture log-likelihood of `angles` (density in radians).
    pub fn log_likelihood(&self, angles: &[T]) -> T {
        let mut buf = vec![T::zero(); self.components.len()];
        angles
            .iter()
            .map(|&a| {
                for (b, c) in buf.iter_mut().zip(&self.components) {
                    *b = c.weight.ln() + c.log_density(a);
                }
                log_sum_exp(&buf)
            })
            .sum()
    }

    pub(crate) fn draw(&self, rng: &mut Rng) -> T {
        let u = T::of(rng.random::<f64>());
        let mut acc = T::zero();
        let mut pick = self.components.len() - 1;
        for (k, c) in self.components.iter().enumerate() {
            acc = acc + c.weight;
            if u < acc {
                pick = k;
                break;
            }
        }
        let c = &self.components[pick];
        draw_von_mises(c.mu, c.kappa, rng)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<T> {
        let mut rng = random::rng(seed);
        (0..n).map(|_| self.draw(&mut rng)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct MixtureFit<T> {
    pub mixture: VonMisesMixture<T>,
    /// Log-likelihood after initialisation and after every EM iteration.
    pub log_likelihood: Vec<T>,
    pub iterations: usize,
}

pub const EM_MAX_ITERATIONS: usize = 200;
pub const EM_TOLERANCE: f64 = 1e-6;
const MIN_ANGLES: usize = 10;

/// EM fit of a `n_components` von Mises mixture, initialised by seeded
/// k-means on the (sin, cos) embedding.
pub fn fit_von_mises_mixture<T: Scalar>(
    angles: &[T],
    n_components: usize,
    seed: u64,
) -> Result<MixtureFit<T>> {
    if angles.len() < MIN_ANGLES {
        return Err(Error::Data(format!(
            "need at least {MIN_ANGLES} angles to fit a von Mises mixture, got {}",
            angles.len()
        )));
    }
    if n_components == 0 {
        return Err(Error::Parameter(
            "a mixture needs at least one component".into(),
        ));
    }
    let n = angles.len();
    let rad: Vec<(T, T)> = angles.iter().map(|a| a.to_radians().sin_cos()).collect();

    let assign = kmeans_unit_circle(&rad, n_components, seed);
    let mut resp = vec![vec![T::zero(); n_components]; n];
    for (i, &k) in assign.iter().enumerate() {
        resp[i][k] = T::one();
    }
    let mut mixture = VonMisesMixture {
        components: vec![
            VonMisesComponent {
                mu: T::zero(),
                kappa: T::zero(),
                weight: T::one() / T::of_usize(n_components),
            };
            n_components
        ],
    };
    m_step(&rad, &resp, &mut mixture);

    let mut history = vec![mixture.log_likelihood(angles)];
    let mut iterations = 0;
    let mut logp = vec![T::zero(); n_components];
    while iterations < EM_MAX_ITERATIONS {
        for (i, &a) in angles.iter().enumerate() {
            for (lp, c) in logp.iter_mut().zip(&mixture.components) {
                *lp = c.weight.ln() + c.log_density(a);
            }
            let norm = log_sum_exp(&logp);
            for (r, &lp) in resp[i].iter_mut().zip(&logp) {
                *r = (lp - norm).exp();
            }
        }
        m_step(&rad, &resp, &mut mixture);
        iterations += 1;
        let ll = mixture.log_likelihood(angles);
        let gain = ll - *history.last().expect("history starts non-empty");
        history.push(ll);
        if gain.abs() < T::of(EM_TOLERANCE) {
            break;
        }
    }
    Ok(MixtureFit {
        mixture,
        log_likelihood: history,
        iterations,
    })
}

fn m_step<T: Scalar>(rad: &[(T, T)], resp: &[Vec<T>], mixture: &mut VonMisesMixture<T>) {
    let n = T::of_usize(rad.len());
    let tiny = T::of(1e-12);
    for (k, comp) in mixture.components.iter_mut().enumerate() {
        let (mut nk, mut s, mut c) = (T::zero(), T::zero(), T::zero());
        for (&(si, ci), r) in rad.iter().zip(resp) {
            nk = nk + r[k];
            s = s + r[k] * si;
            c = c + r[k] * ci;
        }
        comp.weight = nk / n;
        if nk <= tiny {
            // empty component keeps its direction and drops out of the mixture
            continue;
        }
        comp.mu = wrap_degrees(s.atan2(c).to_degrees());
        let rbar = ((s * s + c * c).sqrt() / nk).min(T::one());
        comp.kappa = estimate_kappa(rbar);
    }
}

/// Lloyd's k-means on unit vectors with k-means++ seeding; returns labels.
fn kmeans_unit_circle<T: Scalar>(points: &[(T, T)], k: usize, seed: u64) -> Vec<usize> {
    let mut rng = random::rng(seed);
    let n = points.len();
    let dist2 = |a: (T, T), b: (T, T)| (a.0 - b.0) * (a.0 - b.0) + (a.1 - b.1) * (a.1 - b.1);
    let mut centers = vec![points[rng.random_range(0..n)]];
    while centers.len() < k {
        let d: Vec<f64> = points
            .iter()
            .map(|&p| {
                centers
                    .iter()
                    .map(|&c| dist2(p, c))
                    .fold(T::infinity(), T::min)
                    .f64()
            })
            .collect();
        let total: f64 = d.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &di) in d.iter().enumerate() {
                if u < di {
                    pick = i;
                    break;
                }
                u -= di;
            }
            pick
        } else {
            rng.random_range(0..n)
        };
        centers.push(points[next]);
    }
    let mut labels = vec![0; n];
    for _ in 0..100 {
        let mut changed = false;
        for (i, &p) in points.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| {
                    dist2(p, centers[a])
                        .partial_cmp(&dist2(p, centers[b]))
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .unwrap_or(0);
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        for (j, center) in centers.iter_mut().enumerate() {
            let (mut s, mut c, mut m) = (T::zero(), T::zero(), 0usize);
            for (&p, &l) in points.iter().zip(&labels) {
                if l == j {
                    s = s + p.0;
                    c = c + p.1;
                    m += 1;
                }
            }
            if m > 0 {
                *center = (s / T::of_usize(m), c / T::of_usize(m));
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

/// Magnitude of the mean unit vector of `angles` (degrees).
pub fn mean_resultant_length<T: Scalar>(angles: &[T]) -> T {
    if angles.is_empty() {
        return T::zero();
    }
    let (mut s, mut c) = (T::zero(), T::zero());
    for a in angles {
        let (si, ci) = a.to_radians().sin_cos();
        s = s + si;
        c = c + ci;
    }
    (s * s + c * c).sqrt() / T::of_usize(angles.len())
}

/// Circular mean direction in degrees.
pub fn circular_mean<T: Scalar>(angles: &[T]) -> T {
    let (mut s, mut c) = (T::zero(), T::zero());
    for a in angles {
        let (si, ci) = a.to_radians().sin_cos();
        s = s + si;
        c = c + ci;
    }
    wrap_degrees(s.atan2(c).to_degrees())
}
