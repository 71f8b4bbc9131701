use crate::Design;

/// AEAD nonce input of a protected packet: a 32-bit path identifier
/// followed by the 62-bit packet number, packed into 96 bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Nonce {
    pub path_id: u32,
    pub pn: u64,
}

impl Nonce {
    pub fn to_u128(self) -> u128 {
        (u128::from(self.path_id) << 64) | u128::from(self.pn)
    }

    pub fn to_bytes(self) -> [u8; 12] {
        let mut out = [0u8; 12];
        out[..4].copy_from_slice(&self.path_id.to_be_bytes());
        out[4..].copy_from_slice(&self.pn.to_be_bytes());
        out
    }
}

/// With a single space the path component is always zero; with per-path
/// spaces it carries the path so equal packet numbers on different paths
/// never share a nonce.
pub fn compute_nonce(design: Design, path_id: u64, pn: u64) -> Nonce {
    let path_id = match design {
        Design::Spns => 0,
        Design::Mpns => u32::try_from(path_id).expect("path id exceeds 32 bits"),
    };
    Nonce { path_id, pn }
}
