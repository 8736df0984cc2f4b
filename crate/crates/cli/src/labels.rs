//! Scene and city vocabularies and DCASE-style file names.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

macro_rules! vocabulary {
    ($name:ident, $what:literal, [$($variant:ident => $text:literal),+ $(,)?]) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            pub fn index(self) -> usize {
                self as usize
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(concat!("unknown ", $what, " {:?}"), other)),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

vocabulary!(Scene, "scene", [
    Airport => "airport",
    Bus => "bus",
    Metro => "metro",
    MetroStation => "metro_station",
    Park => "park",
    PublicSquare => "public_square",
    ShoppingMall => "shopping_mall",
    StreetPedestrian => "street_pedestrian",
    StreetTraffic => "street_traffic",
    Tram => "tram",
]);

vocabulary!(City, "city", [
    Barcelona => "barcelona",
    Helsinki => "helsinki",
    London => "london",
    Paris => "paris",
    Stockholm => "stockholm",
    Vienna => "vienna",
]);

/// `scene-city-location-segment-device.wav` → `(scene, city)`. Directories
/// in `name` are ignored.
pub fn parse_dcase_filename(name: &str) -> Result<(Scene, City)> {
    let base = Path::new(name)
        .file_name()
        .and_then(|b| b.to_str())
        .unwrap_or(name);
    let bad = |why: &str| {
        CliError::input(format!(
            "{base:?}: {why}; expected scene-city-location-segment-device.wav"
        ))
    };
    let stem = base
        .strip_suffix(".wav")
        .ok_or_else(|| bad("not a .wav name"))?;
    let parts: Vec<&str> = stem.split('-').collect();
    if parts.len() != 5 || parts.iter().any(|p| p.is_empty()) {
        return Err(bad("wrong number of fields"));
    }
    let scene = parts[0].parse::<Scene>().map_err(|e| bad(&e))?;
    let city = parts[1].parse::<City>().map_err(|e| bad(&e))?;
    Ok((scene, city))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_names() {
        assert_eq!(
            parse_dcase_filename("airport-barcelona-0-0-a.wav").unwrap(),
            (Scene::Airport, City::Barcelona)
        );
        assert_eq!(
            parse_dcase_filename("audio/tram-london-177-5440-a.wav").unwrap(),
            (Scene::Tram, City::London)
        );
        assert_eq!(
            parse_dcase_filename("street_pedestrian-vienna-1-2-c.wav").unwrap(),
            (Scene::StreetPedestrian, City::Vienna)
        );
    }

    #[test]
    fn bad_names() {
        for name in [
            "foo.wav",
            "airport-barcelona-0-0-a.mp3",
            "aeroplane-paris-0-0-a.wav",
            "bus-rome-0-0-a.wav",
            "bus-paris--0-a.wav",
        ] {
            assert!(parse_dcase_filename(name).is_err(), "{name}");
        }
    }

    #[test]
    fn vocab_sizes_and_roundtrip() {
        assert_eq!(Scene::ALL.len(), 10);
        assert_eq!(City::ALL.len(), 6);
        for s in Scene::ALL {
            assert_eq!(s.as_str().parse::<Scene>().unwrap(), *s);
        }
        for c in City::ALL {
            assert_eq!(c.to_string().parse::<City>().unwrap(), *c);
        }
        assert_eq!("Helsinki".parse::<City>().unwrap(), City::Helsinki);
    }
}
