//! Hourly weather process shared by both directions of a station.
//!
//! Conditions move through five severity tiers under a first-order
//! Markov chain, and each tier owns a slice of the reportable weather
//! vocabulary. Temperature follows seasonal and diurnal sinusoids with
//! a tier offset; visibility and precipitation are drawn from
//! tier-specific ranges. One draw sequence produces one station's
//! weather, so both directions see identical conditions.

use chrono::{Datelike, NaiveDateTime, Timelike};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Tier membership over the full weather vocabulary. Every reportable
/// category appears in exactly one tier.
pub(crate) const TIER_MEMBERS: [&[&str]; 5] = [
    // Fair
    &["Clear", "Scattered Clouds", "Partly Cloudy"],
    // Cloudy or indeterminate
    &["Mostly Cloudy", "Overcast", "Haze", "Unknown"],
    // Light precipitation
    &["Light Rain", "Light Drizzle", "Drizzle", "Mist", "Light Snow", "Rain"],
    // Heavy precipitation
    &[
        "Heavy Rain",
        "Heavy Drizzle",
        "Thunderstorm",
        "Light Thunderstorms and Rain",
        "Heavy Thunderstorms and Rain",
        "Thunderstorms and Rain",
        "Light Thunderstorms and Snow",
        "Squalls",
        "Snow",
        "Blowing Snow",
        "Heavy Snow",
        "Freezing Rain",
        "Light Freezing Rain",
        "Light Freezing Drizzle",
        "Ice Pellets",
    ],
    // Fog and ice
    &["Fog", "Shallow Fog", "Patches of Fog", "Light Freezing Fog", "Light Ice Pellets"],
];

/// Hourly tier transition probabilities; rows sum to 1 and favor staying put.
const TRANSITIONS: [[f64; 5]; 5] = [
    [0.90, 0.07, 0.02, 0.005, 0.005],
    [0.15, 0.75, 0.07, 0.02, 0.01],
    [0.05, 0.15, 0.70, 0.08, 0.02],
    [0.02, 0.08, 0.25, 0.62, 0.03],
    [0.05, 0.10, 0.10, 0.05, 0.70],
];

/// Distribution of the first hour's tier.
const INITIAL: [f64; 5] = [0.55, 0.20, 0.12, 0.08, 0.05];

/// Demand retained under each tier; bad weather suppresses travel.
pub(crate) const DEMAND_MULTIPLIER: [f64; 5] = [1.0, 1.0, 0.985, 0.94, 0.96];

/// Capacity retained under each tier; precipitation and fog reduce the
/// flow a lane can carry, which slows traffic through the saturation
/// curve rather than sideways of it.
pub(crate) const CAPACITY_MULTIPLIER: [f64; 5] = [1.0, 1.0, 0.93, 0.80, 0.88];

/// Additive temperature shift per tier, degrees Celsius.
const TEMPERATURE_OFFSET: [f64; 5] = [1.5, 0.0, -1.0, -3.0, -2.0];

/// Standard deviation of the hourly temperature noise.
const TEMPERATURE_NOISE: f64 = 1.5;

/// One station-hour of weather.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct WeatherHour {
    pub tier: usize,
    pub desc: &'static str,
    pub temperature: f64,
    pub visibility: f64,
    pub precipitation: f64,
}

fn sample_index(weights: &[f64; 5], rng: &mut ChaCha8Rng) -> usize {
    let draw: f64 = rng.random();
    let mut cumulative = 0.0;
    for (i, w) in weights.iter().enumerate() {
        cumulative += w;
        if draw < cumulative {
            return i;
        }
    }
    weights.len() - 1
}

fn seasonal_temperature(ts: NaiveDateTime) -> f64 {
    let day_of_year = f64::from(ts.date().ordinal0());
    let hour = f64::from(ts.hour());
    let seasonal = 12.5
        + 12.0 * (std::f64::consts::TAU * (day_of_year - 105.0) / 365.25).sin();
    let diurnal = 4.5 * (std::f64::consts::TAU * (hour - 9.0) / 24.0).sin();
    seasonal + diurnal
}

/// Simulates `n_hours` of hourly weather starting at `start`.
///
/// Draw order per hour is fixed: tier, category, temperature noise,
/// visibility, precipitation. Callers rely on that order staying put
/// for reproducibility across runs.
pub(crate) fn simulate_weather(
    start: NaiveDateTime,
    n_hours: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<WeatherHour> {
    let noise = Normal::new(0.0, TEMPERATURE_NOISE).expect("constant sigma is valid");
    let mut out = Vec::with_capacity(n_hours);
    let mut tier = usize::MAX;
    for step in 0..n_hours {
        let ts = start + chrono::Duration::hours(step as i64);
        tier = if step == 0 {
            sample_index(&INITIAL, rng)
        } else {
            sample_index(&TRANSITIONS[tier], rng)
        };
        let members = TIER_MEMBERS[tier];
        let desc = members[rng.random_range(0..members.len())];
        let temperature = seasonal_temperature(ts) + TEMPERATURE_OFFSET[tier] + noise.sample(rng);
        let visibility = match tier {
            0 => 10.0,
            1 => rng.random_range(7.0..10.0),
            2 => rng.random_range(4.0..8.0),
            3 => rng.random_range(1.5..5.0),
            _ => rng.random_range(0.1..1.2),
        };
        let precipitation = match tier {
            0 | 1 => 0.0,
            2 => rng.random_range(0.2..2.0),
            3 => rng.random_range(1.5..8.0),
            _ => rng.random_range(0.0..0.3),
        };
        out.push(WeatherHour { tier, desc, temperature, visibility, precipitation });
    }
    out
}
