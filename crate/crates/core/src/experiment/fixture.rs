//! Synthetic beaching observations with tunable class separation.
//!
//! Marginal scales follow the three Sydney beaches (SST near 21 °C, speeds a
//! few m/s for wind and a few tenths for current). Absence days carry winds
//! and currents from the west and north-west at any time of year; at
//! `overlap = 0` presence days have them from the south and north and fall in
//! summer. Lower overlap moves every presence parameter further from its
//! absence value; `overlap = 1` makes the two classes identical.

use chrono::NaiveDate;
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::augment::vonmises::draw_von_mises;
use crate::error::{Error, Result};
use crate::random::{self, Rng};
use crate::scalar::Scalar;
use crate::schema::{shorter_arc_delta, wrap_degrees, Dataset, FeatureSchema, Origin, RowMeta};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixtureSpec {
    pub n: usize,
    /// Fraction of presence rows.
    pub prevalence: f64,
    /// 0 separates the classes as far as the template allows, 1 makes them identical.
    pub overlap: f64,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        Self {
            n: 2000,
            prevalence: 0.06,
            overlap: 0.7,
            seed: 0,
        }
    }
}

impl FixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.prevalence > 0.0 && self.prevalence < 1.0) {
            return Err(Error::Parameter(format!(
                "prevalence {} must lie strictly between 0 and 1",
                self.prevalence
            )));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::Parameter(format!(
                "overlap {} must lie in [0, 1]",
                self.overlap
            )));
        }
        if self.n == 0 {
            return Err(Error::Parameter("fixture needs at least one row".into()));
        }
        Ok(())
    }

    pub fn positives(&self) -> usize {
        ((self.n as f64 * self.prevalence).round() as usize).min(self.n)
    }
}

struct Gaussian {
    mean: f64,
    sd: f64,
    /// Reject draws below zero (speeds).
    nonnegative: bool,
}

// sst_c, wind_speed_ms, curr_speed_ms
const CONTINUOUS: [Gaussian; 3] = [
    Gaussian {
        mean: 21.2,
        sd: 2.0,
        nonnegative: false,
    },
    Gaussian {
        mean: 5.5,
        sd: 2.8,
        nonnegative: true,
    },
    Gaussian {
        mean: 0.215,
        sd: 0.154,
        nonnegative: true,
    },
];

/// Absence direction modes as (centre in degrees, weight); each presence
/// mode is its partner rotated along the shorter arc by `1 - overlap`.
const ABSENCE_DIRECTIONS: [(f64, f64); 2] = [(270.0, 0.6), (315.0, 0.4)];
const PRESENCE_DIRECTIONS: [(f64, f64); 2] = [(180.0, 0.5), (0.0, 0.5)];
const DIRECTION_KAPPA: f64 = 16.0;

/// Relative presence weight per month, January first.
const PRESENCE_MONTHS: [f64; 12] = [3.0, 4.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 2.0];

const BEACHES: [(&str, f64); 3] = [
    ("Clovelly", 842.0),
    ("Coogee", 1526.0),
    ("Maroubra", 1483.0),
];

fn pick(weights: &[f64], rng: &mut Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

fn gaussian(g: &Gaussian, mean: f64, rng: &mut Rng) -> f64 {
    loop {
        let x = mean + g.sd * rng.sample::<f64, _>(StandardNormal);
        if !g.nonnegative || x >= 0.0 {
            return x;
        }
    }
}

/// Presence-class parameters at the given overlap: shifted direction modes
/// and month weights.
struct PresenceShape {
    modes: [(f64, f64); 2],
    months: [f64; 12],
}

impl PresenceShape {
    fn new(overlap: f64) -> Self {
        let t = 1.0 - overlap;
        let modes = std::array::from_fn(|i| {
            let (a, wa) = ABSENCE_DIRECTIONS[i];
            let (p, wp) = PRESENCE_DIRECTIONS[i];
            let arc: f64 = shorter_arc_delta(a, p);
            (wrap_degrees(a + t * arc), wa + t * (wp - wa))
        });
        let summer: f64 = PRESENCE_MONTHS.iter().sum();
        let months = std::array::from_fn(|m| overlap / 12.0 + t * PRESENCE_MONTHS[m] / summer);
        Self { modes, months }
    }
}

fn direction<T: Scalar>(modes: &[(f64, f64); 2], rng: &mut Rng) -> T {
    let weights = modes.map(|m| m.1);
    let mu = modes[pick(&weights, rng)].0;
    draw_von_mises(T::of(mu), T::of(DIRECTION_KAPPA), rng)
}

/// Draws a shuffled table over [`FeatureSchema::stinger`] with
/// `round(n * prevalence)` presence rows.
pub fn generate_fixture<T: Scalar>(spec: &FixtureSpec) -> Result<Dataset<T>> {
    spec.validate()?;
    let schema = FeatureSchema::stinger();
    let n_pos = spec.positives();
    let mut rng = random::rng(spec.seed);
    let beach_weights: Vec<f64> = BEACHES.iter().map(|b| b.1).collect();
    let shift = 2.0 * (1.0 - spec.overlap);
    let presence = PresenceShape::new(spec.overlap);

    let mut labels: Vec<u8> = (0..spec.n).map(|i| u8::from(i < n_pos)).collect();
    rand::seq::SliceRandom::shuffle(labels.as_mut_slice(), &mut rng);

    let mut rows = Vec::with_capacity(spec.n);
    let mut meta = Vec::with_capacity(spec.n);
    for &label in &labels {
        let positive = label == 1;
        let cont: Vec<f64> = CONTINUOUS
            .iter()
            .map(|g| {
                let mean = if positive {
                    g.mean + shift * g.sd
                } else {
                    g.mean
                };
                gaussian(g, mean, &mut rng)
            })
            .collect();
        let modes = if positive {
            &presence.modes
        } else {
            &ABSENCE_DIRECTIONS
        };
        let wind_dir: T = direction(modes, &mut rng);
        let curr_dir: T = direction(modes, &mut rng);
        let m = if positive {
            pick(&presence.months, &mut rng) as u32 + 1
        } else {
            rng.random_range(1..=12)
        };
        rows.push(vec![
            T::of(cont[0]),
            wind_dir,
            T::of(cont[1]),
            curr_dir,
            T::of(cont[2]),
            T::of(m as f64),
        ]);
        let year = rng.random_range(2016..=2020);
        let day = rng.random_range(1..=28);
        meta.push(RowMeta {
            beach: Some(BEACHES[pick(&beach_weights, &mut rng)].0.to_string()),
            date: NaiveDate::from_ymd_opt(year, m, day),
            origin: Origin::Real,
        });
    }
    Dataset::new(schema, rows, labels, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::mean;

    #[test]
    fn positive_count_is_rounded_prevalence() {
        let spec = FixtureSpec {
            n: 1000,
            prevalence: 0.06,
            overlap: 0.5,
            seed: 3,
        };
        let ds: Dataset<f64> = generate_fixture(&spec).unwrap();
        assert_eq!(ds.len(), 1000);
        assert_eq!(ds.count_label(1), 60);
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = FixtureSpec::default();
        let a: Dataset<f64> = generate_fixture(&spec).unwrap();
        let b: Dataset<f64> = generate_fixture(&spec).unwrap();
        assert_eq!(a, b);
        let c: Dataset<f64> = generate_fixture(&FixtureSpec { seed: 1, ..spec }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn mean_shift_matches_overlap() {
        let spec = FixtureSpec {
            n: 20000,
            prevalence: 0.5,
            overlap: 0.5,
            seed: 9,
        };
        let ds: Dataset<f64> = generate_fixture(&spec).unwrap();
        let sst = |label| mean(&ds.with_label(label).column(0));
        // one template SD (2.0) of separation
        assert!((sst(1) - sst(0) - 2.0f64).abs() < 0.1);
    }

    #[test]
    fn presence_shape_interpolates() {
        let same = PresenceShape::new(1.0);
        for (a, b) in same.modes.iter().zip(&ABSENCE_DIRECTIONS) {
            assert!((a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12);
        }
        assert!(same.months.iter().all(|&w| (w - 1.0 / 12.0).abs() < 1e-12));
        let apart = PresenceShape::new(0.0);
        assert!((apart.modes[0].0 - 180.0f64).abs() < 1e-9);
        assert!(apart.modes[1].0.abs() < 1e-9);
        assert_eq!(apart.months[5], 0.0);
        let half = PresenceShape::new(0.5);
        assert!((half.modes[0].0 - 225.0f64).abs() < 1e-9);
        assert!((half.modes[1].0 - 337.5f64).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_spec() {
        let bad = FixtureSpec {
            prevalence: 1.0,
            ..FixtureSpec::default()
        };
        assert!(matches!(
            generate_fixture::<f64>(&bad),
            Err(Error::Parameter(_))
        ));
        let bad = FixtureSpec {
            overlap: -0.1,
            ..FixtureSpec::default()
        };
        assert!(generate_fixture::<f64>(&bad).is_err());
    }

    #[test]
    fn dates_agree_with_month() {
        let ds: Dataset<f32> = generate_fixture(&FixtureSpec::default()).unwrap();
        for (row, meta) in ds.rows().iter().zip(ds.meta()) {
            use chrono::Datelike;
            assert_eq!(meta.date.unwrap().month() as f32, row[5]);
        }
    }
}
