//! Temporal encoding: hour of day, weekend flags, and holiday flags.

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike, Weekday};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

/// The three federal holidays that carry their own feature flag. They are
/// the holidays whose traffic deviates most from the ordinary weekly
/// pattern in the study region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Holiday {
    WashingtonsBirthday,
    IndependenceDay,
    ColumbusDay,
}

impl Holiday {
    pub const ALL: [Holiday; 3] =
        [Holiday::WashingtonsBirthday, Holiday::IndependenceDay, Holiday::ColumbusDay];

    pub fn name(self) -> &'static str {
        match self {
            Holiday::WashingtonsBirthday => "Washington's Birthday",
            Holiday::IndependenceDay => "Independence Day",
            Holiday::ColumbusDay => "Columbus Day",
        }
    }
}

impl fmt::Display for Holiday {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Holiday {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let needle = s.trim();
        Holiday::ALL
            .into_iter()
            .find(|h| h.name().eq_ignore_ascii_case(needle))
            .ok_or_else(|| format!("unknown holiday {needle:?}"))
    }
}

/// Dates that count as holidays, loaded from the dataset's holiday file.
///
/// The calendar is an explicit input rather than computed from date rules,
/// so the temporal encoding stays a pure function of its inputs and tests
/// can pin arbitrary calendars.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HolidayCalendar {
    days: BTreeMap<NaiveDate, Holiday>,
}

impl HolidayCalendar {
    pub fn empty() -> Self {
        HolidayCalendar::default()
    }

    pub fn new(entries: impl IntoIterator<Item = (NaiveDate, Holiday)>) -> Self {
        HolidayCalendar { days: entries.into_iter().collect() }
    }

    pub fn holiday_on(&self, date: NaiveDate) -> Option<Holiday> {
        self.days.get(&date).copied()
    }

    /// Entries in date order.
    pub fn iter(&self) -> impl Iterator<Item = (NaiveDate, Holiday)> + '_ {
        self.days.iter().map(|(d, h)| (*d, *h))
    }

    pub fn len(&self) -> usize {
        self.days.len()
    }

    pub fn is_empty(&self) -> bool {
        self.days.is_empty()
    }
}

/// The 29 temporal features: hour-of-day one-hot (24), Saturday, Sunday,
/// then one flag per [`Holiday`] in `Holiday::ALL` order.
pub fn encode_temporal(ts: NaiveDateTime, holidays: &HolidayCalendar) -> [f64; 29] {
    let mut out = [0.0; 29];
    out[ts.hour() as usize] = 1.0;
    match ts.weekday() {
        Weekday::Sat => out[24] = 1.0,
        Weekday::Sun => out[25] = 1.0,
        _ => {}
    }
    if let Some(h) = holidays.holiday_on(ts.date()) {
        let slot = Holiday::ALL.iter().position(|&x| x == h).unwrap();
        out[26 + slot] = 1.0;
    }
    out
}
