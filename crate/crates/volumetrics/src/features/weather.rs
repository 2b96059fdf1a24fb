//! Weather encoding: three numeric readings plus a 33-way condition one-hot.

/// The weather condition vocabulary, in feature-layout order. Index 5
/// (`"Unknown"`) doubles as the catch-all for descriptions outside the list.
pub const WEATHER_CATEGORIES: [&str; 33] = [
    "Clear",
    "Mostly Cloudy",
    "Overcast",
    "Scattered Clouds",
    "Partly Cloudy",
    "Unknown",
    "Thunderstorm",
    "Light Rain",
    "Light Snow",
    "Light Drizzle",
    "Rain",
    "Heavy Rain",
    "Squalls",
    "Haze",
    "Freezing Rain",
    "Light Freezing Rain",
    "Drizzle",
    "Light Thunderstorms and Rain",
    "Heavy Thunderstorms and Rain",
    "Thunderstorms and Rain",
    "Mist",
    "Fog",
    "Light Freezing Drizzle",
    "Light Freezing Fog",
    "Heavy Drizzle",
    "Light Thunderstorms and Snow",
    "Snow",
    "Blowing Snow",
    "Heavy Snow",
    "Shallow Fog",
    "Ice Pellets",
    "Patches of Fog",
    "Light Ice Pellets",
];

const UNKNOWN_INDEX: usize = 5;

/// Index of `desc` within [`WEATHER_CATEGORIES`]. Matching ignores case and
/// surrounding whitespace; anything unmatched maps to the `"Unknown"` slot
/// so unseen descriptions degrade gracefully instead of failing ingestion.
pub fn weather_category_index(desc: &str) -> usize {
    let needle = desc.trim();
    WEATHER_CATEGORIES
        .iter()
        .position(|c| c.eq_ignore_ascii_case(needle))
        .unwrap_or(UNKNOWN_INDEX)
}

/// The 36 weather features: `[temperature, visibility, precipitation]`
/// followed by the one-hot condition block.
pub fn encode_weather(temperature: f64, visibility: f64, precipitation: f64, desc: &str) -> [f64; 36] {
    let mut out = [0.0; 36];
    out[0] = temperature;
    out[1] = visibility;
    out[2] = precipitation;
    out[3 + weather_category_index(desc)] = 1.0;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn category_list_is_unique_and_contains_unknown() {
        let mut seen = std::collections::HashSet::new();
        for c in WEATHER_CATEGORIES {
            assert!(seen.insert(c.to_ascii_lowercase()), "duplicate category {c}");
        }
        assert_eq!(WEATHER_CATEGORIES[UNKNOWN_INDEX], "Unknown");
    }

    #[test]
    fn known_descriptions_map_to_their_slot() {
        assert_eq!(weather_category_index("Clear"), 0);
        assert_eq!(weather_category_index("Light Ice Pellets"), 32);
        assert_eq!(weather_category_index("Thunderstorms and Rain"), 19);
    }

    #[test]
    fn matching_is_case_and_whitespace_insensitive() {
        assert_eq!(weather_category_index("  heavy rain "), weather_category_index("Heavy Rain"));
        assert_eq!(weather_category_index("OVERCAST"), 2);
    }

    #[test]
    fn unmatched_descriptions_fall_back_to_unknown() {
        assert_eq!(weather_category_index("Volcanic Ash"), UNKNOWN_INDEX);
        assert_eq!(weather_category_index(""), UNKNOWN_INDEX);
        // Substrings are not matches: "Rain" and "Light Rain" are distinct.
        assert_eq!(weather_category_index("Rain"), 10);
        assert_eq!(weather_category_index("Rains"), UNKNOWN_INDEX);
    }

    #[test]
    fn encoding_is_one_hot_with_numerics_up_front() {
        let v = encode_weather(72.5, 8.0, 0.12, "Mist");
        assert_eq!(&v[..3], &[72.5, 8.0, 0.12]);
        assert_eq!(v[3 + 20], 1.0);
        assert_eq!(v[3..].iter().sum::<f64>(), 1.0);
    }

    #[test]
    fn every_category_encodes_to_exactly_one_hot() {
        for (i, c) in WEATHER_CATEGORIES.iter().enumerate() {
            let v = encode_weather(0.0, 0.0, 0.0, c);
            assert_eq!(v[3 + i], 1.0, "category {c}");
            assert_eq!(v[3..].iter().sum::<f64>(), 1.0);
        }
    }
}
