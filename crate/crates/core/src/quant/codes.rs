use crate::core::{invalid, Result};

/// Whole bytes needed for one code in [0, c).
pub fn bytes_per_code(c: usize) -> usize {
    let bits = usize::BITS - c.saturating_sub(1).leading_zeros();
    bits.div_ceil(8) as usize
}

/// Little-endian packing of each code into `bytes_per_code(c)` bytes.
pub fn pack_codes(codes: &[u32], c: usize) -> Result<Vec<u8>> {
    let width = bytes_per_code(c);
    let mut out = Vec::with_capacity(codes.len() * width);
    for &code in codes {
        if code as usize >= c {
            return invalid(format!("code {code} outside [0, {c})"));
        }
        out.extend_from_slice(&code.to_le_bytes()[..width]);
    }
    Ok(out)
}

pub fn unpack_codes(bytes: &[u8], c: usize, count: usize) -> Result<Vec<u32>> {
    let width = bytes_per_code(c);
    if bytes.len() != width * count {
        return invalid("packed code length mismatch");
    }
    if width == 0 {
        return Ok(vec![0; count]);
    }
    let codes: Vec<u32> = bytes
        .chunks(width)
        .map(|chunk| {
            let mut word = [0u8; 4];
            word[..width].copy_from_slice(chunk);
            u32::from_le_bytes(word)
        })
        .collect();
    if codes.iter().any(|&v| v as usize >= c) {
        return invalid("packed code out of range");
    }
    Ok(codes)
}
