//! Hour-of-week demand structure behind the synthetic worlds.
//!
//! A carriageway's expected volume is its AADT spread by a day-of-week
//! factor and an hour-of-day share, then reshaped by a commute bias
//! that leans direction A toward the morning peak and direction B
//! toward the evening peak. Holidays run on a damped Sunday pattern
//! regardless of their weekday, which is exactly the structure a
//! day-of-week profile cannot represent.

use chrono::{Datelike, NaiveDate, Weekday};

use crate::features::{Direction, Holiday, HolidayCalendar};

/// Day-of-week demand weights, Monday first. The raw values sum to 7
/// so a week of daily totals averages back to the AADT.
pub(crate) const DAY_FACTORS: [f64; 7] = [1.05, 1.08, 1.10, 1.10, 1.12, 0.85, 0.70];

/// Unnormalized hour-of-day weights with morning and evening commute peaks.
const WEEKDAY_SHAPE: [f64; 24] = [
    0.011, 0.007, 0.006, 0.007, 0.014, 0.032, 0.058, 0.082, 0.078, 0.056, 0.047, 0.046, 0.048,
    0.049, 0.054, 0.064, 0.077, 0.082, 0.062, 0.043, 0.032, 0.024, 0.017, 0.012,
];

/// Unnormalized Saturday weights: one broad midday plateau.
const SATURDAY_SHAPE: [f64; 24] = [
    0.018, 0.012, 0.009, 0.007, 0.008, 0.013, 0.022, 0.033, 0.046, 0.058, 0.066, 0.070, 0.071,
    0.070, 0.068, 0.066, 0.063, 0.060, 0.054, 0.045, 0.037, 0.031, 0.027, 0.021,
];

/// Unnormalized Sunday weights: the plateau starts later and ends earlier.
const SUNDAY_SHAPE: [f64; 24] = [
    0.016, 0.011, 0.008, 0.006, 0.006, 0.008, 0.013, 0.021, 0.033, 0.048, 0.060, 0.068, 0.072,
    0.072, 0.070, 0.068, 0.065, 0.061, 0.055, 0.047, 0.038, 0.030, 0.023, 0.017,
];

/// Signed commute orientation per hour: positive hours lean toward
/// direction A, negative toward direction B.
const COMMUTE_BIAS: [f64; 24] = [
    0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.8, 1.0, 0.9, 0.4, 0.1, 0.0, 0.0, 0.0, 0.0, -0.3, -0.7, -1.0,
    -0.8, -0.4, -0.1, 0.0, 0.0, 0.0,
];

/// Peak share moved between directions at full commute bias.
const COMMUTE_STRENGTH: f64 = 0.25;
/// Weekends and holidays keep only this fraction of the commute bias.
const WEEKEND_COMMUTE_SCALE: f64 = 0.25;
/// Total demand on a holiday relative to a regular Sunday.
const HOLIDAY_DEMAND_SCALE: f64 = 0.95;

fn weekday_index(date: NaiveDate) -> usize {
    date.weekday().num_days_from_monday() as usize
}

/// Normalized demand shapes, one copy per synthetic world.
#[derive(Debug, Clone)]
pub(crate) struct DemandCurve {
    /// Hour shares per weekday, rows summing to 1. This is the curve the
    /// profile estimate column is computed from.
    shares: [[f64; 24]; 7],
    /// Direction-shaped shares, indexed [direction][weekday][hour], rows
    /// renormalized to 1 so the bias moves timing without moving totals.
    dir_shares: [[[f64; 24]; 7]; 2],
}

fn normalized(row: [f64; 24]) -> [f64; 24] {
    let sum: f64 = row.iter().sum();
    row.map(|v| v / sum)
}

impl DemandCurve {
    pub(crate) fn standard() -> Self {
        let mut shares = [[0.0; 24]; 7];
        for d in 0..7 {
            let base = match d {
                5 => SATURDAY_SHAPE,
                6 => SUNDAY_SHAPE,
                _ => WEEKDAY_SHAPE,
            };
            shares[d] = normalized(base);
        }
        let mut dir_shares = [[[0.0; 24]; 7]; 2];
        for (dir_idx, sign) in [(0usize, 1.0f64), (1, -1.0)] {
            for d in 0..7 {
                let commute_scale = if d >= 5 { WEEKEND_COMMUTE_SCALE } else { 1.0 };
                let mut row = [0.0; 24];
                for h in 0..24 {
                    row[h] = shares[d][h]
                        * (1.0 + sign * COMMUTE_STRENGTH * commute_scale * COMMUTE_BIAS[h]);
                }
                dir_shares[dir_idx][d] = normalized(row);
            }
        }
        DemandCurve { shares, dir_shares }
    }

    /// The day-of-week profile estimate: AADT times day factor times
    /// hour share, blind to holidays, weather, and direction shape.
    pub(crate) fn profile_estimate(&self, aadt: f64, date: NaiveDate, hour: usize) -> f64 {
        let d = weekday_index(date);
        aadt * DAY_FACTORS[d] * self.shares[d][hour]
    }

    /// Expected volume before weather and noise are applied.
    pub(crate) fn base_volume(
        &self,
        aadt: f64,
        direction: Direction,
        date: NaiveDate,
        hour: usize,
        holidays: &HolidayCalendar,
    ) -> f64 {
        let dir_idx = match direction {
            Direction::A => 0,
            Direction::B => 1,
        };
        if holidays.holiday_on(date).is_some() {
            aadt * DAY_FACTORS[6] * HOLIDAY_DEMAND_SCALE * self.dir_shares[dir_idx][6][hour]
        } else {
            let d = weekday_index(date);
            aadt * DAY_FACTORS[d] * self.dir_shares[dir_idx][d][hour]
        }
    }
}

fn nth_weekday_of_month(year: i32, month: u32, weekday: Weekday, n: u32) -> NaiveDate {
    let first = NaiveDate::from_ymd_opt(year, month, 1).expect("valid month start");
    let offset = (7 + weekday.num_days_from_monday() - first.weekday().num_days_from_monday()) % 7;
    first + chrono::Days::new(u64::from(offset + (n - 1) * 7))
}

/// The three modeled holidays for each given year: Washington's Birthday
/// (third Monday of February), Independence Day (July 4), and Columbus
/// Day (second Monday of October).
pub fn federal_holidays(years: impl IntoIterator<Item = i32>) -> HolidayCalendar {
    let mut entries = Vec::new();
    for year in years {
        entries.push((
            nth_weekday_of_month(year, 2, Weekday::Mon, 3),
            Holiday::WashingtonsBirthday,
        ));
        entries.push((
            NaiveDate::from_ymd_opt(year, 7, 4).expect("july 4 exists"),
            Holiday::IndependenceDay,
        ));
        entries.push((
            nth_weekday_of_month(year, 10, Weekday::Mon, 2),
            Holiday::ColumbusDay,
        ));
    }
    HolidayCalendar::new(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn day_factors_sum_to_seven() {
        assert!((DAY_FACTORS.iter().sum::<f64>() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn all_share_rows_sum_to_one() {
        let curve = DemandCurve::standard();
        for d in 0..7 {
            assert!((curve.shares[d].iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for dir in 0..2 {
                let sum: f64 = curve.dir_shares[dir][d].iter().sum();
                assert!((sum - 1.0).abs() < 1e-12, "direction {dir} day {d} sums to {sum}");
            }
            assert!(curve.shares[d].iter().all(|s| *s > 0.0));
        }
    }

    #[test]
    fn commute_bias_moves_morning_share_toward_direction_a() {
        let curve = DemandCurve::standard();
        // Wednesday 07:00 leans to A, 17:00 leans to B.
        assert!(curve.dir_shares[0][2][7] > curve.dir_shares[1][2][7]);
        assert!(curve.dir_shares[0][2][17] < curve.dir_shares[1][2][17]);
        // Weekends keep a much smaller split.
        let weekday_gap = curve.dir_shares[0][2][7] - curve.dir_shares[1][2][7];
        let weekend_gap = curve.dir_shares[0][5][7] - curve.dir_shares[1][5][7];
        assert!(weekend_gap.abs() < weekday_gap.abs() / 2.0);
    }

    #[test]
    fn profile_estimate_is_aadt_times_factor_times_share() {
        let curve = DemandCurve::standard();
        let wednesday = NaiveDate::from_ymd_opt(2019, 7, 10).unwrap();
        let got = curve.profile_estimate(48_000.0, wednesday, 8);
        let expected = 48_000.0 * DAY_FACTORS[2] * curve.shares[2][8];
        assert_eq!(got, expected);
        let week_total: f64 = (0..7)
            .flat_map(|d| {
                let date = NaiveDate::from_ymd_opt(2019, 7, 8).unwrap() + chrono::Days::new(d);
                (0..24).map(move |h| (date, h))
            })
            .map(|(date, h)| curve.profile_estimate(48_000.0, date, h))
            .sum();
        assert!((week_total - 7.0 * 48_000.0).abs() / (7.0 * 48_000.0) < 1e-12);
    }

    #[test]
    fn holidays_run_on_a_damped_sunday_pattern() {
        let curve = DemandCurve::standard();
        let holidays = federal_holidays([2019]);
        let july4 = NaiveDate::from_ymd_opt(2019, 7, 4).unwrap();
        assert_eq!(july4.weekday(), Weekday::Thu);
        let sunday = NaiveDate::from_ymd_opt(2019, 7, 7).unwrap();
        let on_holiday = curve.base_volume(48_000.0, Direction::A, july4, 8, &holidays);
        let on_sunday = curve.base_volume(48_000.0, Direction::A, sunday, 8, &holidays);
        assert!((on_holiday - 0.95 * on_sunday).abs() < 1e-9);
        // The plain Thursday at the same hour looks nothing like it.
        let thursday = NaiveDate::from_ymd_opt(2019, 7, 11).unwrap();
        let on_thursday = curve.base_volume(48_000.0, Direction::A, thursday, 8, &holidays);
        assert!(on_thursday > on_holiday);
    }

    #[test]
    fn federal_holiday_dates_are_correct_for_known_years() {
        let calendar = federal_holidays([2019, 2020]);
        assert_eq!(calendar.len(), 6);
        let expect = [
            (2019, 2, 18, Holiday::WashingtonsBirthday),
            (2019, 7, 4, Holiday::IndependenceDay),
            (2019, 10, 14, Holiday::ColumbusDay),
            (2020, 2, 17, Holiday::WashingtonsBirthday),
            (2020, 7, 4, Holiday::IndependenceDay),
            (2020, 10, 12, Holiday::ColumbusDay),
        ];
        for (y, m, d, holiday) in expect {
            let date = NaiveDate::from_ymd_opt(y, m, d).unwrap();
            assert_eq!(calendar.holiday_on(date), Some(holiday), "{date}");
        }
    }
}
