/// Frequency-encoding configuration for positions and view directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodingConfig {
    pub num_freqs_position: usize,
    pub num_freqs_direction: usize,
    pub include_input: bool,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        EncodingConfig {
            num_freqs_position: 8,
            num_freqs_direction: 4,
            include_input: true,
        }
    }
}

pub fn encoded_len(k: usize, num_freqs: usize, include_input: bool) -> usize {
    k * (usize::from(include_input) + 2 * num_freqs)
}

/// Frequency encoding: optionally the raw values, then per coordinate
/// `sin(2^j pi v), cos(2^j pi v)` for `j = 0..L-1`.
pub fn positional_encode(values: &[f64], num_freqs: usize, include_input: bool) -> Vec<f64> {
    let mut out = Vec::with_capacity(encoded_len(values.len(), num_freqs, include_input));
    encode_into(values, num_freqs, include_input, &mut out);
    out
}

pub fn encode_into(values: &[f64], num_freqs: usize, include_input: bool, out: &mut Vec<f64>) {
    if include_input {
        out.extend_from_slice(values);
    }
    for &v in values {
        let mut freq = std::f64::consts::PI;
        for _ in 0..num_freqs {
            let (s, c) = (freq * v).sin_cos();
            out.push(s);
            out.push(c);
            freq *= 2.0;
        }
    }
}
