//! Synthetic corridor worlds with known ground truth.
//!
//! The generator lays out a set of bidirectional count stations, gives
//! each one fixed infrastructure attributes and a probe penetration
//! rate, then rolls hour by hour: demand comes from the hour-of-week
//! curve in [`demand`], weather from the per-station Markov process in
//! [`weather`], and probe counts from binomial thinning of the true
//! volume. Every random draw belongs to a dedicated stream keyed by
//! station and direction, so a station's data does not change when the
//! world grows and the same seed always rebuilds the same files.

mod demand;
mod weather;

pub use demand::federal_holidays;

use std::path::Path;

use chrono::{Datelike, Days, NaiveDate, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, LogNormal};
use thiserror::Error;

use crate::features::{
    write_ground_truth, write_holidays, write_observations, write_stations, Direction,
    FeatureError, GroundTruthRow, HolidayCalendar, HourlyObservation, ProbeCounts, RoadClass,
    RoadType, StationMeta, WindowCounts,
};
use crate::metrics::{CapacityTable, Facility, MetricsError};

/// File names produced by [`export_dataset`] inside a dataset directory.
pub const OBSERVATIONS_FILE: &str = "observations.csv";
pub const STATIONS_FILE: &str = "stations.csv";
pub const HOLIDAYS_FILE: &str = "holidays.txt";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.csv";

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Knobs for one synthetic world.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub n_stations: usize,
    pub start_date: NaiveDate,
    pub n_days: usize,
    pub seed: u64,
    /// Lowest and highest station probe penetration rates.
    pub penetration_range: (f64, f64),
    /// Light, medium, heavy vehicle shares of the true volume.
    pub class_shares: [f64; 3],
    /// Sigma of the mean-one lognormal factor on hourly volumes.
    pub volume_noise_sigma: f64,
    /// Sigma of the mean-one lognormal factor on hourly speeds.
    pub speed_noise_sigma: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_stations: 10,
            start_date: NaiveDate::from_ymd_opt(2019, 6, 3).expect("valid date"),
            n_days: 28,
            seed: 0,
            penetration_range: (0.008, 0.045),
            class_shares: [0.85, 0.10, 0.05],
            volume_noise_sigma: 0.12,
            speed_noise_sigma: 0.015,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidConfig(m));
        if self.n_stations == 0 {
            return bad("n_stations must be at least 1".into());
        }
        if self.n_days < 7 {
            return bad(format!("n_days must cover a full week, got {}", self.n_days));
        }
        let (lo, hi) = self.penetration_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo <= hi && hi < 1.0) {
            return bad(format!("penetration range ({lo}, {hi}) must satisfy 0 < lo <= hi < 1"));
        }
        if self.class_shares.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return bad("class shares must be positive".into());
        }
        let share_sum: f64 = self.class_shares.iter().sum();
        if (share_sum - 1.0).abs() > 1e-9 {
            return bad(format!("class shares sum to {share_sum}, expected 1"));
        }
        for (name, sigma) in [
            ("volume_noise_sigma", self.volume_noise_sigma),
            ("speed_noise_sigma", self.speed_noise_sigma),
        ] {
            if !sigma.is_finite() || sigma < 0.0 {
                return bad(format!("{name} must be finite and non-negative, got {sigma}"));
            }
        }
        Ok(())
    }
}

/// A generated world: metadata, observations, truth, and the calendar.
///
/// Observations and ground truth rows are aligned one to one and sorted
/// by station, then direction, then timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub stations: Vec<StationMeta>,
    pub observations: Vec<HourlyObservation>,
    pub ground_truth: Vec<GroundTruthRow>,
    pub holidays: HolidayCalendar,
}

/// Low-discrepancy fraction for station `i`: coverage of the unit
/// interval is even for every prefix, so penetration rates spread over
/// their range no matter how many stations a world has.
fn golden_fraction(i: usize) -> f64 {
    const GOLDEN: f64 = 0.618_033_988_749_894_9;
    (i as f64 * GOLDEN).fract()
}

struct StationAttributes {
    road_type: RoadType,
    road_class: RoadClass,
    lanes: u32,
    speed_limit: f64,
    free_flow_speed: f64,
    aadt_by_direction: [f64; 2],
    penetration: f64,
    latitude: f64,
    longitude: f64,
    capacity: f64,
}

fn draw_station_attributes(
    index: usize,
    config: &GeneratorConfig,
    table: &CapacityTable,
    rng: &mut ChaCha8Rng,
) -> Result<StationAttributes, SynthError> {
    let (road_type, road_class) = match index % 3 {
        0 => (RoadType::Interstate, RoadClass::Motorway),
        1 => (RoadType::Us, RoadClass::Trunk),
        _ => (RoadType::Md, RoadClass::Trunk),
    };
    let lanes = match road_class {
        RoadClass::Motorway => rng.random_range(3..=4u32),
        RoadClass::Trunk => rng.random_range(2..=3u32),
    };
    let speed_limit = match road_class {
        RoadClass::Motorway => [55.0, 60.0, 65.0, 70.0][rng.random_range(0..4)],
        RoadClass::Trunk => [45.0, 50.0, 55.0, 60.0][rng.random_range(0..4)],
    };
    let free_flow_speed = speed_limit + 5.0;
    let aadt_per_lane = rng.random_range(6000.0f64.ln()..24000.0f64.ln()).exp();
    let total_aadt = aadt_per_lane * f64::from(lanes);
    let asymmetry = rng.random_range(-0.08..0.08);
    let aadt_by_direction = [
        (total_aadt * (0.5 + asymmetry)).round(),
        (total_aadt * (0.5 - asymmetry)).round(),
    ];
    let latitude = rng.random_range(38.2..39.6);
    let longitude = rng.random_range(-79.4..-75.1);
    let facility = Facility::for_road_class(road_class);
    let capacity =
        table.capacity_per_lane(free_flow_speed, facility)? * f64::from(lanes);
    let (lo, hi) = config.penetration_range;
    let penetration = lo + (hi - lo) * golden_fraction(index);
    Ok(StationAttributes {
        road_type,
        road_class,
        lanes,
        speed_limit,
        free_flow_speed,
        aadt_by_direction,
        penetration,
        latitude,
        longitude,
        capacity,
    })
}

fn binomial(n: u64, p: f64, rng: &mut ChaCha8Rng) -> u64 {
    Binomial::new(n, p).expect("probability in [0, 1]").sample(rng)
}

/// Generates one synthetic world.
pub fn generate(config: &GeneratorConfig) -> Result<SyntheticDataset, SynthError> {
    config.validate()?;
    let curve = demand::DemandCurve::standard();
    let table = CapacityTable::builtin();
    let start = config.start_date.and_hms_opt(0, 0, 0).expect("midnight exists");
    let end_date = config.start_date + Days::new(config.n_days as u64 - 1);
    let holidays = federal_holidays(config.start_date.year()..=end_date.year());
    // One lead-in hour so the first observation has a prior window.
    let lead_start = start - chrono::Duration::hours(1);
    let n_hours = config.n_days * 24 + 1;

    let [light_share, medium_share, heavy_share] = config.class_shares;
    let medium_given_rest = medium_share / (medium_share + heavy_share);
    let volume_noise = LogNormal::new(
        -config.volume_noise_sigma * config.volume_noise_sigma / 2.0,
        config.volume_noise_sigma,
    )
    .expect("validated sigma");
    let speed_noise = LogNormal::new(
        -config.speed_noise_sigma * config.speed_noise_sigma / 2.0,
        config.speed_noise_sigma,
    )
    .expect("validated sigma");

    let mut stations = Vec::with_capacity(config.n_stations * 2);
    let mut observations = Vec::with_capacity(config.n_stations * 2 * (n_hours - 1));
    let mut ground_truth = Vec::with_capacity(observations.capacity());

    for i in 0..config.n_stations {
        let mut station_rng = ChaCha8Rng::seed_from_u64(config.seed);
        station_rng.set_stream(3 * i as u64);
        let attrs = draw_station_attributes(i, config, table, &mut station_rng)?;
        let weather_hours = weather::simulate_weather(lead_start, n_hours, &mut station_rng);
        let station_id = format!("S{:02}", i + 1);

        for (dir_idx, direction) in [(0usize, Direction::A), (1, Direction::B)] {
            stations.push(StationMeta {
                station_id: station_id.clone(),
                direction,
                road_type: attrs.road_type,
                road_class: attrs.road_class,
                lanes: attrs.lanes,
                speed_limit: attrs.speed_limit,
                aadt: attrs.aadt_by_direction[dir_idx],
                latitude: attrs.latitude,
                longitude: attrs.longitude,
            });

            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream((3 * i + 1 + dir_idx) as u64);
            let mut previous_second30 = [0u32; 3];
            for (step, conditions) in weather_hours.iter().enumerate() {
                let ts = lead_start + chrono::Duration::hours(step as i64);
                let base = curve.base_volume(
                    attrs.aadt_by_direction[dir_idx],
                    direction,
                    ts.date(),
                    ts.hour() as usize,
                    &holidays,
                ) * weather::DEMAND_MULTIPLIER[conditions.tier];
                let volume = (base * volume_noise.sample(&mut rng)).max(0.0).round() as u64;

                let light = binomial(volume, light_share, &mut rng);
                let medium = binomial(volume - light, medium_given_rest, &mut rng);
                let heavy = volume - light - medium;

                let mut windows = [WindowCounts::default(); 3];
                for (slot, class_count) in [light, medium, heavy].into_iter().enumerate() {
                    let probes = binomial(class_count, attrs.penetration, &mut rng);
                    let first30 = binomial(probes, 0.5, &mut rng);
                    windows[slot] = WindowCounts {
                        first30: u32::try_from(first30).expect("probe count fits u32"),
                        second30: u32::try_from(probes - first30).expect("probe count fits u32"),
                        prior30: previous_second30[slot],
                    };
                }

                // Speed responds to saturation across the whole range: the
                // linear term keeps the speed-saturation link visible on
                // lightly loaded stations, the quartic term models the
                // collapse near capacity. Weather enters as a capacity
                // reduction, so it moves speed along the same curve.
                let effective_capacity =
                    attrs.capacity * weather::CAPACITY_MULTIPLIER[conditions.tier];
                let vc_ratio = volume as f64 / effective_capacity;
                let congested =
                    attrs.free_flow_speed / (1.0 + 0.5 * vc_ratio + 0.45 * vc_ratio.powi(4));
                let avg_speed = (congested * speed_noise.sample(&mut rng))
                    .clamp(5.0, 1.2 * attrs.free_flow_speed);

                let is_lead_in = step == 0;
                if !is_lead_in {
                    observations.push(HourlyObservation {
                        station_id: station_id.clone(),
                        direction,
                        timestamp: ts,
                        probes: ProbeCounts {
                            light: windows[0],
                            medium: windows[1],
                            heavy: windows[2],
                        },
                        avg_speed,
                        free_flow_speed: attrs.free_flow_speed,
                        temperature: conditions.temperature,
                        visibility: conditions.visibility,
                        precipitation: conditions.precipitation,
                        weather_desc: conditions.desc.to_string(),
                        profile_estimate: curve.profile_estimate(
                            attrs.aadt_by_direction[dir_idx],
                            ts.date(),
                            ts.hour() as usize,
                        ),
                        target_volume: Some(volume as f64),
                    });
                    ground_truth.push(GroundTruthRow {
                        station_id: station_id.clone(),
                        direction,
                        timestamp: ts,
                        true_volume: volume as f64,
                        penetration_rate: attrs.penetration,
                    });
                }
                previous_second30 = [windows[0].second30, windows[1].second30, windows[2].second30];
            }
        }
    }

    Ok(SyntheticDataset { stations, observations, ground_truth, holidays })
}

/// Writes the four dataset files into `dir`, creating it if needed.
pub fn export_dataset(dataset: &SyntheticDataset, dir: &Path) -> Result<(), SynthError> {
    std::fs::create_dir_all(dir).map_err(|source| SynthError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    write_observations(dir.join(OBSERVATIONS_FILE), &dataset.observations)?;
    write_stations(dir.join(STATIONS_FILE), &dataset.stations)?;
    write_holidays(dir.join(HOLIDAYS_FILE), &dataset.holidays)?;
    write_ground_truth(dir.join(GROUND_TRUTH_FILE), &dataset.ground_truth)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{
        read_ground_truth, read_holidays, read_observations, read_stations,
    };
    use std::collections::BTreeMap;

    fn small_config() -> GeneratorConfig {
        GeneratorConfig {
            n_stations: 4,
            // A Monday, two weeks clear of the modeled holidays.
            start_date: NaiveDate::from_ymd_opt(2019, 3, 4).unwrap(),
            n_days: 14,
            seed: 17,
            ..GeneratorConfig::default()
        }
    }

    fn carriageway_key(id: &str, direction: Direction) -> String {
        format!("{id}-{direction}")
    }

    #[test]
    fn same_seed_rebuilds_the_same_world() {
        let config = small_config();
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(a, b);
        let mut other = config;
        other.seed = 18;
        let c = generate(&other).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn existing_stations_survive_world_growth() {
        let mut config = small_config();
        let small = generate(&config).unwrap();
        config.n_stations = 7;
        let large = generate(&config).unwrap();
        assert_eq!(&large.stations[..small.stations.len()], &small.stations[..]);
        assert_eq!(
            &large.observations[..small.observations.len()],
            &small.observations[..]
        );
        assert_eq!(
            &large.ground_truth[..small.ground_truth.len()],
            &small.ground_truth[..]
        );
    }

    #[test]
    fn dataset_pieces_are_aligned_and_complete() {
        let config = small_config();
        let data = generate(&config).unwrap();
        let expected_rows = config.n_stations * 2 * config.n_days * 24;
        assert_eq!(data.stations.len(), config.n_stations * 2);
        assert_eq!(data.observations.len(), expected_rows);
        assert_eq!(data.ground_truth.len(), expected_rows);
        for (obs, truth) in data.observations.iter().zip(&data.ground_truth) {
            assert_eq!(obs.station_id, truth.station_id);
            assert_eq!(obs.direction, truth.direction);
            assert_eq!(obs.timestamp, truth.timestamp);
            assert_eq!(obs.target_volume, Some(truth.true_volume));
            let in_hour = obs.probes.in_hour_total();
            assert!(f64::from(in_hour) <= truth.true_volume);
        }
    }

    #[test]
    fn weekly_volume_totals_track_aadt() {
        let data = generate(&small_config()).unwrap();
        let aadt: BTreeMap<String, f64> = data
            .stations
            .iter()
            .map(|s| (s.carriageway_id(), s.aadt))
            .collect();
        let mut weekly: BTreeMap<(String, usize), f64> = BTreeMap::new();
        let start = small_config().start_date;
        for obs in &data.observations {
            let week = (obs.timestamp.date() - start).num_days() as usize / 7;
            let key = (carriageway_key(&obs.station_id, obs.direction), week);
            *weekly.entry(key).or_default() += obs.target_volume.unwrap();
        }
        for ((carriageway, week), total) in weekly {
            let expected = 7.0 * aadt[&carriageway];
            let rel = (total - expected).abs() / expected;
            assert!(rel < 0.05, "{carriageway} week {week}: {total} vs {expected} ({rel:.3})");
        }
    }

    #[test]
    fn probe_rates_track_station_penetration() {
        let data = generate(&small_config()).unwrap();
        let mut volume: BTreeMap<String, f64> = BTreeMap::new();
        let mut probes: BTreeMap<String, f64> = BTreeMap::new();
        let mut rates: BTreeMap<String, f64> = BTreeMap::new();
        for (obs, truth) in data.observations.iter().zip(&data.ground_truth) {
            let key = carriageway_key(&obs.station_id, obs.direction);
            *volume.entry(key.clone()).or_default() += truth.true_volume;
            *probes.entry(key.clone()).or_default() += f64::from(obs.probes.in_hour_total());
            rates.insert(key, truth.penetration_rate);
        }
        for (key, rate) in &rates {
            let realized = probes[key] / volume[key];
            let rel = (realized - rate).abs() / rate;
            assert!(rel < 0.2, "{key}: realized {realized:.4} vs configured {rate:.4}");
        }
        // Station penetrations spread over the configured range.
        let min = rates.values().cloned().fold(f64::INFINITY, f64::min);
        let max = rates.values().cloned().fold(0.0, f64::max);
        assert!(min < 0.015 && max > 0.03, "penetration spread [{min}, {max}]");
    }

    #[test]
    fn prior_window_is_the_previous_hours_second_half() {
        let data = generate(&small_config()).unwrap();
        let mut previous: BTreeMap<String, &HourlyObservation> = BTreeMap::new();
        for obs in &data.observations {
            let key = carriageway_key(&obs.station_id, obs.direction);
            if let Some(prev) = previous.get(&key) {
                assert_eq!(prev.timestamp + chrono::Duration::hours(1), obs.timestamp);
                assert_eq!(obs.probes.light.prior30, prev.probes.light.second30);
                assert_eq!(obs.probes.medium.prior30, prev.probes.medium.second30);
                assert_eq!(obs.probes.heavy.prior30, prev.probes.heavy.second30);
            }
            previous.insert(key, obs);
        }
    }

    #[test]
    fn profile_estimates_repeat_weekly_and_integrate_to_aadt() {
        let data = generate(&small_config()).unwrap();
        let aadt: BTreeMap<String, f64> = data
            .stations
            .iter()
            .map(|s| (s.carriageway_id(), s.aadt))
            .collect();
        let mut first_week: BTreeMap<(String, usize), f64> = BTreeMap::new();
        let start = small_config().start_date;
        let mut weekly_profile: BTreeMap<String, f64> = BTreeMap::new();
        for obs in &data.observations {
            let key = carriageway_key(&obs.station_id, obs.direction);
            let hour_of_week = (obs.timestamp.date() - start).num_days() as usize % 7 * 24
                + obs.timestamp.hour() as usize;
            let slot = (key.clone(), hour_of_week);
            match first_week.get(&slot) {
                None => {
                    first_week.insert(slot, obs.profile_estimate);
                    *weekly_profile.entry(key).or_default() += obs.profile_estimate;
                }
                Some(seen) => assert_eq!(*seen, obs.profile_estimate, "{slot:?}"),
            }
            assert!(obs.profile_estimate > 0.0);
        }
        for (key, total) in weekly_profile {
            let expected = 7.0 * aadt[&key];
            assert!((total - expected).abs() / expected < 1e-9, "{key}");
        }
    }

    #[test]
    fn both_directions_share_the_station_weather() {
        let data = generate(&small_config()).unwrap();
        let mut by_station_hour: BTreeMap<(String, chrono::NaiveDateTime), &HourlyObservation> =
            BTreeMap::new();
        for obs in &data.observations {
            let key = (obs.station_id.clone(), obs.timestamp);
            match by_station_hour.get(&key) {
                None => {
                    by_station_hour.insert(key, obs);
                }
                Some(other) => {
                    assert_eq!(obs.weather_desc, other.weather_desc);
                    assert_eq!(obs.temperature, other.temperature);
                    assert_eq!(obs.visibility, other.visibility);
                    assert_eq!(obs.precipitation, other.precipitation);
                }
            }
        }
    }

    #[test]
    fn speeds_stay_inside_physical_bounds_and_congestion_bites() {
        let mut config = small_config();
        config.n_stations = 12;
        let data = generate(&config).unwrap();
        let mut saw_congestion = false;
        for obs in &data.observations {
            assert!(obs.avg_speed >= 5.0);
            assert!(obs.avg_speed <= 1.2 * obs.free_flow_speed);
            if obs.avg_speed < 0.9 * obs.free_flow_speed {
                saw_congestion = true;
            }
        }
        assert!(saw_congestion, "no hour ever slowed below 90 percent of free flow");
    }

    #[test]
    fn speed_ranks_fall_as_saturation_rises() {
        use crate::metrics::{CapacityTable, Facility};

        fn ranks(values: &[f64]) -> Vec<f64> {
            let mut order: Vec<usize> = (0..values.len()).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            let mut out = vec![0.0; values.len()];
            let mut i = 0;
            while i < order.len() {
                let mut j = i;
                while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
                    j += 1;
                }
                let average_rank = (i + j) as f64 / 2.0 + 1.0;
                for &idx in &order[i..=j] {
                    out[idx] = average_rank;
                }
                i = j + 1;
            }
            out
        }

        fn spearman(a: &[f64], b: &[f64]) -> f64 {
            let (ra, rb) = (ranks(a), ranks(b));
            let n = ra.len() as f64;
            let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
            let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
            let va: f64 = ra.iter().map(|x| (x - ma) * (x - ma)).sum();
            let vb: f64 = rb.iter().map(|y| (y - mb) * (y - mb)).sum();
            cov / (va * vb).sqrt()
        }

        let mut config = small_config();
        config.n_stations = 12;
        let data = generate(&config).unwrap();
        let table = CapacityTable::builtin();
        let meta: BTreeMap<String, &StationMeta> =
            data.stations.iter().map(|s| (s.carriageway_id(), s)).collect();
        let mut by_carriageway: BTreeMap<String, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for obs in &data.observations {
            let key = carriageway_key(&obs.station_id, obs.direction);
            let station = meta[&key];
            let per_lane = table
                .capacity_per_lane(obs.free_flow_speed, Facility::for_road_class(station.road_class))
                .unwrap();
            let saturation = obs.target_volume.unwrap() / (per_lane * f64::from(station.lanes));
            let entry = by_carriageway.entry(key).or_default();
            entry.0.push(obs.avg_speed);
            entry.1.push(saturation);
        }
        for (carriageway, (speeds, saturations)) in by_carriageway {
            let rho = spearman(&speeds, &saturations);
            assert!(rho < -0.5, "{carriageway}: speed vs v/c Spearman {rho:.3}");
        }
    }

    #[test]
    fn holiday_calendar_has_the_three_days_per_covered_year() {
        let mut config = small_config();
        config.start_date = NaiveDate::from_ymd_opt(2019, 1, 1).unwrap();
        config.n_days = 400;
        config.n_stations = 1;
        let data = generate(&config).unwrap();
        assert_eq!(data.holidays.len(), 6);
        for (y, m, d) in [(2019, 2, 18), (2019, 7, 4), (2019, 10, 14), (2020, 2, 17)] {
            let date = NaiveDate::from_ymd_opt(y, m, d).unwrap();
            assert!(data.holidays.holiday_on(date).is_some(), "{date}");
        }
        // Independence Day runs well below the adjacent Thursdays.
        let july4: f64 = data
            .observations
            .iter()
            .filter(|o| o.timestamp.date() == NaiveDate::from_ymd_opt(2019, 7, 4).unwrap())
            .map(|o| o.target_volume.unwrap())
            .sum();
        let plain_thursday: f64 = data
            .observations
            .iter()
            .filter(|o| o.timestamp.date() == NaiveDate::from_ymd_opt(2019, 7, 11).unwrap())
            .map(|o| o.target_volume.unwrap())
            .sum();
        assert!(july4 < 0.8 * plain_thursday, "july4 {july4} vs thursday {plain_thursday}");
    }

    #[test]
    fn export_writes_files_that_read_back_identically() {
        let data = generate(&small_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        export_dataset(&data, dir.path()).unwrap();
        assert_eq!(
            read_observations(dir.path().join(OBSERVATIONS_FILE)).unwrap(),
            data.observations
        );
        assert_eq!(read_stations(dir.path().join(STATIONS_FILE)).unwrap(), data.stations);
        assert_eq!(
            read_ground_truth(dir.path().join(GROUND_TRUTH_FILE)).unwrap(),
            data.ground_truth
        );
        let holidays = read_holidays(dir.path().join(HOLIDAYS_FILE)).unwrap();
        assert_eq!(holidays.len(), data.holidays.len());
        for (date, holiday) in data.holidays.iter() {
            assert_eq!(holidays.holiday_on(date), Some(holiday));
        }
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let ok = GeneratorConfig::default();
        assert!(ok.validate().is_ok());
        let cases: Vec<(&str, Box<dyn Fn(&mut GeneratorConfig)>)> = vec![
            ("zero stations", Box::new(|c| c.n_stations = 0)),
            ("short horizon", Box::new(|c| c.n_days = 3)),
            ("zero penetration", Box::new(|c| c.penetration_range.0 = 0.0)),
            ("inverted range", Box::new(|c| c.penetration_range = (0.05, 0.01))),
            ("full penetration", Box::new(|c| c.penetration_range.1 = 1.0)),
            ("shares off unity", Box::new(|c| c.class_shares = [0.5, 0.2, 0.2])),
            ("negative sigma", Box::new(|c| c.volume_noise_sigma = -0.1)),
        ];
        for (name, mutate) in cases {
            let mut config = GeneratorConfig::default();
            mutate(&mut config);
            assert!(
                matches!(config.validate(), Err(SynthError::InvalidConfig(_))),
                "{name} slipped through"
            );
            assert!(matches!(generate(&config), Err(SynthError::InvalidConfig(_))), "{name}");
        }
    }
}
