//! Small shared helpers: stable hashing, seed derivation, char-offset
//! slicing.

/// FNV-1a over bytes. Used for stable (cross-process) fingerprints of
/// vocabularies, configs and artifact metadata.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Derive an independent sub-seed from a master seed and a stream tag.
///
/// Used wherever a component needs its own RNG stream (per fold, per
/// tree, per bootstrap replicate) so that parallel execution stays
/// bitwise identical to sequential execution.
pub fn subseed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer over the combined value
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Slice `text` by Unicode scalar-value offsets.
///
/// Corpus spans are defined in char offsets, not bytes; this walks the
/// string once. Out-of-range offsets clamp to the text end.
pub fn slice_chars(text: &str, start: usize, end: usize) -> &str {
    let mut byte_start = text.len();
    let mut byte_end = text.len();
    for (count, (bytes, _)) in text.char_indices().enumerate() {
        if count == start {
            byte_start = bytes;
        }
        if count == end {
            byte_end = bytes;
            break;
        }
    }
    if start >= end || byte_start >= byte_end {
        return "";
    }
    &text[byte_start..byte_end]
}

/// Number of Unicode scalar values in `text`.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fnv_is_stable() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), fnv1a64(b"a"));
        assert_ne!(fnv1a64(b"a"), fnv1a64(b"b"));
    }

    #[test]
    fn subseed_streams_differ() {
        assert_ne!(subseed(7, 0), subseed(7, 1));
        assert_eq!(subseed(7, 3), subseed(7, 3));
    }

    #[test]
    fn char_slicing() {
        assert_eq!(slice_chars("héllo", 1, 3), "él");
        assert_eq!(slice_chars("abc", 0, 3), "abc");
        assert_eq!(slice_chars("abc", 2, 2), "");
        assert_eq!(slice_chars("abc", 1, 10), "bc");
        assert_eq!(char_len("héllo"), 5);
    }
}
