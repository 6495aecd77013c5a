//! Sequential colour scales and hex colours.

use std::fmt;

use serde::{Deserialize, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rgb(pub u8, pub u8, pub u8);

impl Rgb {
    pub const BLACK: Rgb = Rgb(0, 0, 0);
    pub const WHITE: Rgb = Rgb(255, 255, 255);

    pub fn grey(level: u8) -> Rgb {
        Rgb(level, level, level)
    }

    pub fn from_hex(s: &str) -> Option<Rgb> {
        let h = s.strip_prefix('#')?;
        if h.len() != 6 {
            return None;
        }
        let c = |i: usize| u8::from_str_radix(&h[i..i + 2], 16).ok();
        Some(Rgb(c(0)?, c(2)?, c(4)?))
    }

    pub fn lerp(self, o: Rgb, t: f64) -> Rgb {
        let mix = |a: u8, b: u8| {
            (a as f64 + (b as f64 - a as f64) * t)
                .round()
                .clamp(0.0, 255.0) as u8
        };
        Rgb(mix(self.0, o.0), mix(self.1, o.1), mix(self.2, o.2))
    }

    /// Relative luminance (sRGB, WCAG definition).
    pub fn luminance(self) -> f64 {
        luminance([self.0 as f64, self.1 as f64, self.2 as f64])
    }

    fn channels(self) -> [f64; 3] {
        [self.0 as f64, self.1 as f64, self.2 as f64]
    }
}

/// Relative luminance of 0–255 channel values.
fn luminance(c: [f64; 3]) -> f64 {
    let lin = |c: f64| {
        let v = c / 255.0;
        if v <= 0.04045 {
            v / 12.92
        } else {
            ((v + 0.055) / 1.055).powf(2.4)
        }
    };
    0.2126 * lin(c[0]) + 0.7152 * lin(c[1]) + 0.0722 * lin(c[2])
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{:02x}{:02x}{:02x}", self.0, self.1, self.2)
    }
}

impl Serialize for Rgb {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rgb {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Rgb::from_hex(&s).ok_or_else(|| serde::de::Error::custom(format!("bad colour {s:?}")))
    }
}

/// ColorBrewer YlOrRd, 9 classes.
pub const YL_OR_RD: [&str; 9] = [
    "#ffffcc", "#ffeda0", "#fed976", "#feb24c", "#fd8d3c", "#fc4e2a", "#e31a1c", "#bd0026",
    "#800026",
];

/// ColorBrewer Blues, 9 classes.
pub const BLUES: [&str; 9] = [
    "#f7fbff", "#deebf7", "#c6dbef", "#9ecae1", "#6baed6", "#4292c6", "#2171b5", "#08519c",
    "#08306b",
];

/// Continuous scale through evenly spaced anchor colours over a value domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColourScale {
    pub name: String,
    pub domain: [f64; 2],
    /// Evenly spaced colours from the low to the high end.
    pub anchors: Vec<Rgb>,
}

impl ColourScale {
    pub fn yl_or_rd(min: f64, max: f64) -> Self {
        Self::from_anchors("YlOrRd", &YL_OR_RD, min, max)
    }

    pub fn from_anchors(name: &str, anchors: &[&str], min: f64, max: f64) -> Self {
        let anchors = anchors
            .iter()
            .map(|h| Rgb::from_hex(h).expect("valid anchor colour"))
            .collect();
        Self {
            name: name.to_string(),
            domain: [min, max],
            anchors,
        }
    }

    /// Position of `v` in the domain, clamped to [0, 1]; a degenerate domain
    /// maps everything to 1.
    pub fn position(&self, v: f64) -> f64 {
        let [lo, hi] = self.domain;
        if hi <= lo {
            return 1.0;
        }
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    /// Unrounded channels at position `t`.
    fn channels_at(&self, t: f64) -> [f64; 3] {
        let Some(last) = self.anchors.len().checked_sub(1) else {
            return [0.0; 3];
        };
        let f = t.clamp(0.0, 1.0) * last as f64;
        let i = (f.floor() as usize).min(last.saturating_sub(1));
        let (a, b) = (
            self.anchors[i].channels(),
            self.anchors[(i + 1).min(last)].channels(),
        );
        let u = f - i as f64;
        [0, 1, 2].map(|k| a[k] + (b[k] - a[k]) * u)
    }

    pub fn at(&self, t: f64) -> Rgb {
        let c = self
            .channels_at(t)
            .map(|v| v.round().clamp(0.0, 255.0) as u8);
        Rgb(c[0], c[1], c[2])
    }

    /// Luminance before rounding to 8-bit channels.
    pub fn luminance_at(&self, t: f64) -> f64 {
        luminance(self.channels_at(t))
    }

    pub fn sample(&self, v: f64) -> Rgb {
        self.at(self.position(v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hex_round_trip() {
        assert_eq!(Rgb(255, 237, 160).to_string(), "#ffeda0");
        assert_eq!(Rgb::from_hex("#800026"), Some(Rgb(128, 0, 38)));
        assert_eq!(Rgb::from_hex("800026"), None);
    }

    #[test]
    fn endpoints_and_degenerate_domain() {
        let s = ColourScale::yl_or_rd(2.0, 10.0);
        assert_eq!(s.sample(2.0).to_string(), YL_OR_RD[0]);
        assert_eq!(s.sample(10.0).to_string(), YL_OR_RD[8]);
        let flat = ColourScale::yl_or_rd(5.0, 5.0);
        assert_eq!(flat.sample(5.0).to_string(), YL_OR_RD[8]);
    }

    #[test]
    fn lightness_is_monotone() {
        let s = ColourScale::yl_or_rd(0.0, 1.0);
        let mut prev = f64::INFINITY;
        for i in 0..=1000 {
            let l = s.luminance_at(i as f64 / 1000.0);
            assert!(l < prev, "at {i}");
            prev = l;
        }
    }
}
