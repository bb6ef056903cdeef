//! QR codes (byte mode, versions 1 to 10) for print-to-web links.
//!
//! [`encode_qr`] produces a module matrix; [`decode_qr`] reverses it,
//! including Reed-Solomon correction, and serves as the round-trip check for
//! printed codes.

mod decode;
mod encode;
pub mod gf;
pub mod layout;
mod render;

use thiserror::Error;

pub use decode::decode_qr;
pub use encode::encode_qr;
pub use layout::byte_capacity;
pub use render::{render_qr_png, scan_qr_png, DEFAULT_QUIET_MODULES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum EccLevel {
    L,
    #[default]
    M,
    Q,
    H,
}

impl EccLevel {
    pub const ALL: [EccLevel; 4] = [EccLevel::L, EccLevel::M, EccLevel::Q, EccLevel::H];

    pub(crate) fn ordinal(self) -> usize {
        self as usize
    }

    /// Two-bit level indicator used in the format information.
    pub(crate) fn format_bits(self) -> u16 {
        match self {
            EccLevel::L => 1,
            EccLevel::M => 0,
            EccLevel::Q => 3,
            EccLevel::H => 2,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QrError {
    #[error("nothing to encode")]
    Empty,
    #[error("payload must be ASCII")]
    NotAscii,
    #[error("payload of {len} bytes exceeds the maximum of {max} bytes at level {ecc:?}")]
    TooLong { len: usize, max: usize, ecc: EccLevel },
    #[error("structural error: {0}")]
    Structure(String),
    #[error("unrecoverable codeword corruption in block {0}")]
    Uncorrectable(usize),
    #[error("malformed payload: {0}")]
    Payload(String),
    #[error("module size must be at least 1 pixel")]
    ModuleSize,
}

/// A QR symbol without its quiet zone. `modules[y][x]` is true for dark.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QrMatrix {
    pub version: u8,
    pub ecc_level: EccLevel,
    pub mask_id: u8,
    pub modules: Vec<Vec<bool>>,
}

impl QrMatrix {
    pub fn side(&self) -> usize {
        self.modules.len()
    }

    /// Wraps a raw module grid, reading version from its size and level and
    /// mask from its format information.
    pub fn from_modules(modules: Vec<Vec<bool>>) -> Result<Self, QrError> {
        let (version, ecc_level, mask_id) = decode::read_structure(&modules)?;
        Ok(QrMatrix { version, ecc_level, mask_id, modules })
    }
}
