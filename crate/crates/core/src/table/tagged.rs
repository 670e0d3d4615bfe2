use serde::{Deserialize, Serialize};

use super::expr::{fits, mask, Ty, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tag {
    Top,
    Bottom,
}

/// An m-bit word: the first m/2 bits hold the tag, the last m/2 the payload.
///
/// `Bottom` always carries a zero payload.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaggedValue {
    pub tag: Tag,
    pub payload: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum TaggedError {
    #[error("word has {got} bits, expected {want}")]
    Width { got: usize, want: usize },
    #[error("tag half is neither top nor bottom")]
    InvalidTag,
    #[error("bottom value with non-zero payload")]
    DirtyBottom,
    #[error("value {value} does not fit in a {bits}-bit payload")]
    Overflow { value: i64, bits: u32 },
}

impl TaggedValue {
    pub const BOTTOM: TaggedValue = TaggedValue {
        tag: Tag::Bottom,
        payload: 0,
    };

    /// Wraps a plaintext value as (⊤, v), rejecting integers that do not fit
    /// the m/2-bit payload.
    pub fn top(v: Value, m: u32) -> Result<TaggedValue, TaggedError> {
        let h = m / 2;
        if let Value::Int(x) = v {
            if !fits(x, h) {
                return Err(TaggedError::Overflow { value: x, bits: h });
            }
        }
        Ok(TaggedValue {
            tag: Tag::Top,
            payload: v.to_payload(h),
        })
    }

    pub fn is_top(&self) -> bool {
        self.tag == Tag::Top
    }

    pub fn value(&self, ty: Ty, m: u32) -> Option<Value> {
        self.is_top()
            .then(|| Value::from_payload(ty, self.payload, m / 2))
    }

    pub fn tag_bits(&self, m: u32) -> Vec<bool> {
        let raw = u64::from(self.is_top());
        word_bits(raw, m / 2)
    }

    pub fn payload_bits(&self, m: u32) -> Vec<bool> {
        word_bits(self.payload, m / 2)
    }

    pub fn to_bits(&self, m: u32) -> Vec<bool> {
        let mut bits = self.tag_bits(m);
        bits.extend(self.payload_bits(m));
        bits
    }

    pub fn from_bits(bits: &[bool], m: u32) -> Result<TaggedValue, TaggedError> {
        if bits.len() != m as usize {
            return Err(TaggedError::Width {
                got: bits.len(),
                want: m as usize,
            });
        }
        let h = (m / 2) as usize;
        let tag = bits_word(&bits[..h]);
        let payload = bits_word(&bits[h..]);
        match tag {
            0 if payload == 0 => Ok(TaggedValue::BOTTOM),
            0 => Err(TaggedError::DirtyBottom),
            1 => Ok(TaggedValue {
                tag: Tag::Top,
                payload: payload & mask(h as u32),
            }),
            _ => Err(TaggedError::InvalidTag),
        }
    }
}

/// MSB-first bits of the low `n` bits of `w`.
pub fn word_bits(w: u64, n: u32) -> Vec<bool> {
    (0..n).rev().map(|i| (w >> i) & 1 == 1).collect()
}

/// Inverse of [`word_bits`].
pub fn bits_word(bits: &[bool]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_is_tag_then_payload() {
        let v = TaggedValue::top(Value::Int(26), 16).unwrap();
        let bits = v.to_bits(16);
        assert_eq!(bits_word(&bits[..8]), 1);
        assert_eq!(bits_word(&bits[8..]), 26);
        assert_eq!(TaggedValue::from_bits(&bits, 16).unwrap(), v);
        assert!(TaggedValue::BOTTOM.to_bits(16).iter().all(|b| !b));
    }

    #[test]
    fn negative_payload_round_trips() {
        let v = TaggedValue::top(Value::Int(-5), 16).unwrap();
        assert_eq!(v.payload, 0xfb);
        assert_eq!(v.value(Ty::Int, 16), Some(Value::Int(-5)));
        assert!(TaggedValue::top(Value::Int(128), 16).is_err());
    }

    #[test]
    fn malformed_words_rejected() {
        let mut bits = vec![false; 16];
        bits[15] = true;
        assert_eq!(
            TaggedValue::from_bits(&bits, 16),
            Err(TaggedError::DirtyBottom)
        );
        bits[6] = true;
        assert_eq!(
            TaggedValue::from_bits(&bits, 16),
            Err(TaggedError::InvalidTag)
        );
    }
}
