//! Serde helpers writing `Vec<bool>` as a `"0101…"` string.

use serde::{Deserialize, Deserializer, Serializer};

pub fn to_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

pub fn from_str(s: &str) -> Result<Vec<bool>, String> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(format!("invalid bit character `{c}`")),
        })
        .collect()
}

pub fn serialize<S: Serializer>(bits: &[bool], s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&to_string(bits))
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
    let s = String::deserialize(d)?;
    from_str(&s).map_err(serde::de::Error::custom)
}

/// `Vec<Vec<bool>>` as a list of bit strings.
pub mod many {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(rows: &[Vec<bool>], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(rows.iter().map(|r| super::to_string(r)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<bool>>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| super::from_str(s).map_err(serde::de::Error::custom))
            .collect()
    }
}
