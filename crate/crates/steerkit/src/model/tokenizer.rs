//! Byte-level tokenizer: ids 0..=255 are raw bytes, followed by two special
//! tokens. No external vocabulary assets.

/// Number of raw byte tokens.
pub const BYTE_TOKENS: usize = 256;
/// Special token that activates a planted style direction.
pub const TRIGGER_TOKEN: u32 = 256;
/// Neutral special sharing the trigger's embedding, used in control prompts
/// so that pre-injection activations are indistinguishable.
pub const PLACEBO_TOKEN: u32 = 257;
/// Default vocabulary size: bytes plus specials.
pub const VOCAB_SIZE: usize = 258;

/// UTF-8 bytes of `text` as token ids.
pub fn encode(text: &str) -> Vec<u32> {
    text.bytes().map(u32::from).collect()
}

/// Lossy inverse of [`encode`]; special tokens are dropped.
pub fn decode(tokens: &[u32]) -> String {
    let bytes: Vec<u8> = tokens
        .iter()
        .filter(|&&t| t < BYTE_TOKENS as u32)
        .map(|&t| t as u8)
        .collect();
    String::from_utf8_lossy(&bytes).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_round_trip() {
        let text = "steer me";
        assert_eq!(decode(&encode(text)), text);
    }

    #[test]
    fn specials_dropped_on_decode() {
        let mut tokens = encode("ab");
        tokens.insert(0, TRIGGER_TOKEN);
        tokens.push(PLACEBO_TOKEN);
        assert_eq!(decode(&tokens), "ab");
    }

    #[test]
    fn non_ascii_round_trip() {
        let text = "naïve – 訳";
        assert_eq!(decode(&encode(text)), text);
    }
}
