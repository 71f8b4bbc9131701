//! QUIC variable-length integers (two-bit length prefix).

use std::fmt;

use super::WireError;

/// Largest value a varint can carry, `2^62 - 1`.
pub const MAX_VARINT: u64 = (1 << 62) - 1;

/// An integer in `0..2^62`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarInt(u64);

impl VarInt {
    pub const MAX: VarInt = VarInt(MAX_VARINT);

    pub const fn from_u32(v: u32) -> Self {
        VarInt(v as u64)
    }

    pub fn new(v: u64) -> Result<Self, WireError> {
        if v > MAX_VARINT {
            Err(WireError::VarIntRange(v))
        } else {
            Ok(VarInt(v))
        }
    }

    pub const fn into_inner(self) -> u64 {
        self.0
    }

    pub fn encoded_len(self) -> usize {
        encoded_len(self.0)
    }
}

impl TryFrom<u64> for VarInt {
    type Error = WireError;

    fn try_from(v: u64) -> Result<Self, WireError> {
        VarInt::new(v)
    }
}

impl From<VarInt> for u64 {
    fn from(v: VarInt) -> u64 {
        v.0
    }
}

impl fmt::Display for VarInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Minimal encoded length of `v`. Values above [`MAX_VARINT`] report 8, the
/// encoder rejects them.
pub const fn encoded_len(v: u64) -> usize {
    if v < 1 << 6 {
        1
    } else if v < 1 << 14 {
        2
    } else if v < 1 << 30 {
        4
    } else {
        8
    }
}

/// Appends the minimal encoding of `v` to `buf`.
pub fn encode_into(v: u64, buf: &mut Vec<u8>) -> Result<(), WireError> {
    if v > MAX_VARINT {
        return Err(WireError::VarIntRange(v));
    }
    match encoded_len(v) {
        1 => buf.push(v as u8),
        2 => buf.extend_from_slice(&((v as u16) | 0x4000).to_be_bytes()),
        4 => buf.extend_from_slice(&((v as u32) | 0x8000_0000).to_be_bytes()),
        _ => buf.extend_from_slice(&(v | 0xc000_0000_0000_0000).to_be_bytes()),
    }
    Ok(())
}

pub fn varint_encode(v: u64) -> Result<Vec<u8>, WireError> {
    let mut buf = Vec::with_capacity(8);
    encode_into(v, &mut buf)?;
    Ok(buf)
}

/// Decodes one varint from the front of `bytes`, returning the value and the
/// number of bytes consumed.
pub fn varint_decode(bytes: &[u8]) -> Result<(u64, usize), WireError> {
    let first = *bytes.first().ok_or(WireError::Truncated)?;
    let len = 1usize << (first >> 6);
    if bytes.len() < len {
        return Err(WireError::Truncated);
    }
    let mut v = u64::from(first & 0x3f);
    for b in &bytes[1..len] {
        v = (v << 8) | u64::from(*b);
    }
    Ok((v, len))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encode_examples() {
        assert_eq!(varint_encode(0).unwrap(), vec![0x00]);
        assert_eq!(varint_encode(1252).unwrap(), vec![0x44, 0xe4]);
        assert_eq!(varint_encode(1 << 62), Err(WireError::VarIntRange(1 << 62)));
        // RFC 9000 appendix A.1 samples.
        assert_eq!(
            varint_encode(151_288_809_941_952_652).unwrap(),
            vec![0xc2, 0x19, 0x7c, 0x5e, 0xff, 0x14, 0xe8, 0x8c]
        );
        assert_eq!(
            varint_encode(494_878_333).unwrap(),
            vec![0x9d, 0x7f, 0x3e, 0x7d]
        );
        assert_eq!(varint_encode(15_293).unwrap(), vec![0x7b, 0xbd]);
        assert_eq!(varint_encode(37).unwrap(), vec![0x25]);
    }

    #[test]
    fn decode_examples() {
        assert_eq!(varint_decode(&[0x00]).unwrap(), (0, 1));
        assert_eq!(varint_decode(&[0x44, 0xe4]).unwrap(), (1252, 2));
        assert_eq!(varint_decode(&[0x44]), Err(WireError::Truncated));
        assert_eq!(varint_decode(&[]), Err(WireError::Truncated));
        // Non-minimal encodings are accepted.
        assert_eq!(varint_decode(&[0x40, 0x25]).unwrap(), (37, 2));
    }

    #[test]
    fn length_boundaries() {
        for (v, len) in [
            (63, 1),
            (64, 2),
            (16_383, 2),
            (16_384, 4),
            ((1 << 30) - 1, 4),
            (1 << 30, 8),
            (MAX_VARINT, 8),
        ] {
            assert_eq!(encoded_len(v), len, "{v}");
            assert_eq!(varint_encode(v).unwrap().len(), len);
        }
    }

    #[test]
    fn varint_newtype() {
        assert!(VarInt::new(MAX_VARINT).is_ok());
        assert!(VarInt::try_from(MAX_VARINT + 1).is_err());
        assert_eq!(VarInt::from_u32(1252).encoded_len(), 2);
    }
}
